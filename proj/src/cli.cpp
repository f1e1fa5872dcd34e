#include "dirnet/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "dirnet/error.hpp"
#include "dirnet/io.hpp"
#include "dirnet/kernels.hpp"
#include "dirnet/network.hpp"
#include "dirnet/posterior.hpp"
#include "dirnet/sampler.hpp"
#include "dirnet/synthetic.hpp"
#include "dirnet/transform.hpp"

namespace dirnet {

namespace fs = std::filesystem;

namespace {

struct TransformOptions {
  std::string input;
  std::string out;
  std::optional<std::size_t> top_k;
  double epsilon = kDefaultEpsilon;
  char delimiter = ',';
};

struct SimulateOptions {
  std::string out;
  std::size_t nodes = 10;
  std::size_t periods = 4;
  std::optional<double> mu_slope;
  double mu0 = 0.0;
  double tau_eta = 1.0, tau_theta = 1.0, tau_gamma = 1.0;
  std::uint64_t seed = 1;
};

struct FitOptions {
  std::string data;
  std::string out;
  ChainConfig chain;
  Hyperparams hyper;
  std::optional<std::size_t> adapt_window;
  std::optional<std::uint64_t> seed;
  std::string kernel = "auto";
  std::string start;
  bool quiet = false;
};

struct SummarizeOptions {
  std::string chain;
  std::string out;
  std::string relevance;
};

// Applies `key=value` lines (keys are long flag names) to options the
// command line left unset.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (item.name == "config") throw ConfigError("config file " + path + ": nested config not supported");
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + item.name);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError("config file " + path + ": unknown key '" + item.name + "'");
    }
    if (opt->count() > 0) continue;
    try {
      for (const auto& v : item.inputs) opt->add_result(v);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("config file " + path + ": " + item.name + ": " + e.what());
    }
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << body;
}

void cmd_transform(const TransformOptions& o, std::ostream& err) {
  if (o.top_k && *o.top_k == 0) throw ConfigError("--top-k must be >= 1");
  const DynamicNetwork raw = read_edge_list(o.input, CsvFormat{o.delimiter});
  if (o.top_k && (*o.top_k == 0 || *o.top_k > raw.n_nodes())) {
    throw ConfigError("--top-k must lie in [1, " + std::to_string(raw.n_nodes()) + "]");
  }
  const fs::path out = o.out;
  fs::create_directories(out);

  {
    std::ofstream stats(out / "stats.csv");
    if (!stats) throw DataError("cannot write " + (out / "stats.csv").string());
    stats << "period,label,edge_count,total_weight,relative_total\n";
    const auto rows = network_stats(raw);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      stats << t << ',' << raw.period_labels()[t] << ',' << rows[t].edge_count << ','
            << format_double(rows[t].total_weight) << ',' << format_double(rows[t].relative_total) << '\n';
    }
  }

  const DynamicNetwork observable = to_observable(raw);
  const RescaleResult rescaled = rescale_to_absolute(observable);
  for (const auto& w : rescaled.report.warnings) err << "dirnet transform: warning: " << w << '\n';
  write_rescale_json(out / "rescale.json", rescaled.report, raw.period_labels());

  const RelevanceTable full = relevance(rescaled.network);
  const DynamicNetwork kept =
      o.top_k ? top_k_subnetwork(rescaled.network, full, *o.top_k) : rescaled.network;
  write_relevance_csv(out / "relevance.csv", restrict_relevance(full, kept), raw.period_labels());

  const RelativeNetwork rel = to_relative(kept, o.epsilon);
  write_network_dir(rel.network, out / "network");
  if (rel.network.n_periods() >= 2) {
    write_entropy_change_csv(out / "entropy_change.csv", entropy_change_distribution(rel.network, rel.mask),
                             rel.network.period_labels());
  } else {
    err << "dirnet transform: single period, entropy_change.csv not written\n";
  }
  const std::size_t masked = rel.mask.n_periods() * rel.mask.n_nodes() - rel.mask.active_count();
  err << "dirnet transform: " << rel.network.n_nodes() << " nodes, " << rel.network.n_periods() << " periods, "
      << masked << " empty rows masked\n";
}

void cmd_simulate(const SimulateOptions& o, std::ostream& err) {
  SynthSpec spec;
  spec.n_nodes = o.nodes;
  spec.n_periods = o.periods;
  if (o.mu_slope) spec.mu = linear_drift(o.periods, o.mu0, *o.mu_slope);
  spec.mu0 = o.mu0;
  spec.tau_eta = o.tau_eta;
  spec.tau_theta = o.tau_theta;
  spec.tau_gamma = o.tau_gamma;
  spec.seed = o.seed;
  const SynthResult sim = generate(spec);

  const fs::path out = o.out;
  fs::create_directories(out);
  {
    std::ofstream edges(out / "edges.csv");
    if (!edges) throw DataError("cannot write " + (out / "edges.csv").string());
    edges << "period,lender,borrower,weight\n";
    write_edge_list(sim.network, edges);
  }
  write_truth_json(out / "truth.json", sim.truth, o.seed);
  write_network_dir(sim.network, out / "network");
  err << "dirnet simulate: N=" << o.nodes << " T=" << o.periods << " seed=" << o.seed << '\n';
}

// Effective settings in the --config format; re-running with it reproduces the chain.
std::string run_config(const FitOptions& o) {
  const ChainConfig& c = o.chain;
  const Hyperparams& h = o.hyper;
  std::string s;
  auto put = [&](const char* key, const std::string& value) { s += std::string(key) + "=" + value + "\n"; };
  put("iterations", std::to_string(c.n_iterations));
  put("burnin", std::to_string(c.n_burnin));
  put("thin", std::to_string(c.thin));
  put("adapt-window", std::to_string(c.effective_adapt_window()));
  put("adapt-batch", std::to_string(c.adapt_batch));
  put("target-low", format_double(c.target_low));
  put("target-high", format_double(c.target_high));
  put("initial-sd", format_double(c.initial_proposal_sd));
  put("seed", std::to_string(c.seed));
  put("tau-mu", format_double(h.tau_mu));
  put("a-eta", format_double(h.a_eta));
  put("b-eta", format_double(h.b_eta));
  put("a-theta", format_double(h.a_theta));
  put("b-theta", format_double(h.b_theta));
  put("a-gamma", format_double(h.a_gamma));
  put("b-gamma", format_double(h.b_gamma));
  return s;
}

void cmd_fit(FitOptions o, bool seed_from_config, std::ostream& err) {
  const DynamicNetwork net = read_network_dir(o.data);
  if (net.stage() != Stage::Relative) {
    throw DataError("fit needs a relative-exposure network (stage Y), got stage " + std::string(stage_tag(net.stage())));
  }
  kernels::set_isa(kernels::parse_isa(o.kernel));

  RunInfo info;
  info.input = o.data;
  info.hyper = o.hyper;
  info.created = utc_timestamp();
  if (o.seed) {
    o.chain.seed = *o.seed;
    info.seed_source = seed_from_config ? "config" : "flag";
  } else {
    o.chain.seed = entropy_seed();
    info.seed_source = "entropy";
    err << "dirnet fit: no --seed given, using " << o.chain.seed << '\n';
  }
  o.chain.adapt_window = o.adapt_window;
  o.chain.validate();
  o.hyper.validate();

  const ModelData data(net, RowMask::from_network(net));
  const fs::path out = o.out;
  write_chain_manifest_started(out, data, o.chain, info);
  write_text(out / "run.conf", run_config(o));

  ChainWriter writer(out);
  RunHooks hooks;
  hooks.sink = &writer;
  if (!o.start.empty()) hooks.start = read_truth_json(o.start);
  const std::size_t step = std::max<std::size_t>(1, o.chain.n_iterations / 10);
  if (!o.quiet) {
    hooks.after_sweep = [&](const ChainState& s) {
      if (s.iteration % step == 0) {
        err << "dirnet fit: iteration " << s.iteration << " / " << o.chain.n_iterations << '\n';
      }
    };
  }
  const PosteriorSample sample = run_chain(data, o.hyper, o.chain, hooks);
  write_chain_results(out, sample, info);
  err << "dirnet fit: " << sample.n_draws() << " draws in " << sample.wall_seconds << " s (" << sample.kernel
      << " kernel)\n";
}

void cmd_summarize(const SummarizeOptions& o, std::ostream& err) {
  const PosteriorSample sample = read_chain_dir(o.chain);
  std::optional<RelevanceTable> rel;
  if (!o.relevance.empty()) rel = read_relevance_csv(o.relevance);
  const Summary summary = summarize(sample, rel ? &*rel : nullptr);
  for (const auto& w : summary.warnings) err << "dirnet summarize: warning: " << w << '\n';
  write_summary_dir(o.out.empty() ? o.chain : o.out, summary);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirichlet latent-variable model for dynamic weighted networks", "dirnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_id());

  TransformOptions t;
  auto* transform = app.add_subcommand("transform", "Edge list -> relative-exposure network, rescale report, "
                                                    "relevance and entropy changes");
  transform->add_option("input", t.input, "Edge-list CSV with header period,lender,borrower,weight")
      ->required()
      ->check(CLI::ExistingFile);
  transform->add_option("-o,--out", t.out, "Output directory")->required();
  transform->add_option("--top-k", t.top_k, "Keep the k nodes of largest aggregated relevance (default: all)");
  transform->add_option("--epsilon", t.epsilon, "Floor for zero entries of non-empty rows")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  transform->add_option("--delimiter", t.delimiter, "Field delimiter of the input")->capture_default_str();

  SimulateOptions s;
  auto* simulate = app.add_subcommand("simulate", "Draw a relative-exposure network from the model");
  simulate->add_option("-o,--out", s.out, "Output directory")->required();
  simulate->add_option("--nodes", s.nodes, "Number of nodes N (>= 3)")->capture_default_str();
  simulate->add_option("--periods", s.periods, "Number of periods T")->capture_default_str();
  simulate->add_option("--mu-slope", s.mu_slope, "Linear drift mu_t = mu0 + slope*t (default: random walk)");
  simulate->add_option("--mu0", s.mu0, "Drift level of the first period")->capture_default_str();
  simulate->add_option("--tau-eta", s.tau_eta, "Random-walk increment precision")->capture_default_str();
  simulate->add_option("--tau-theta", s.tau_theta, "Precision of diversification effects")->capture_default_str();
  simulate->add_option("--tau-gamma", s.tau_gamma, "Precision of attractiveness effects")->capture_default_str();
  simulate->add_option("--seed", s.seed, "RNG seed")->capture_default_str();

  FitOptions f;
  auto* fit = app.add_subcommand("fit", "Run the Metropolis-within-Gibbs sampler on a relative-exposure network");
  std::string fit_config;
  fit->add_option("--config", fit_config, "key=value file of fit flags; the command line takes precedence")
      ->check(CLI::ExistingFile);
  fit->add_option("data", f.data, "Network directory written by transform or simulate")
      ->required()
      ->check(CLI::ExistingDirectory);
  fit->add_option("-o,--out", f.out, "Chain output directory")->required();
  fit->add_option("--iterations", f.chain.n_iterations, "Total sweeps")->capture_default_str();
  fit->add_option("--burnin", f.chain.n_burnin, "Discarded initial sweeps")->capture_default_str();
  fit->add_option("--thin", f.chain.thin, "Keep every k-th sweep after burn-in")->capture_default_str();
  fit->add_option("--adapt-window", f.adapt_window, "Sweeps with proposal tuning [default: burnin/2]");
  fit->add_option("--adapt-batch", f.chain.adapt_batch, "Sweeps per tuning step")->capture_default_str();
  fit->add_option("--target-low", f.chain.target_low, "Lower target acceptance rate")->capture_default_str();
  fit->add_option("--target-high", f.chain.target_high, "Upper target acceptance rate")->capture_default_str();
  fit->add_option("--initial-sd", f.chain.initial_proposal_sd, "Initial proposal standard deviation")
      ->capture_default_str();
  fit->add_option("--seed", f.seed, "64-bit RNG seed [default: drawn from entropy, echoed in the manifest]");
  fit->add_option("--threads", f.chain.threads, "Likelihood worker threads (results do not depend on it)")
      ->capture_default_str();
  fit->add_option("--kernel", f.kernel, "Row kernel: scalar, avx2 or auto")
      ->capture_default_str()
      ->check(CLI::IsMember({"scalar", "avx2", "auto"}));
  fit->add_option("--tau-mu", f.hyper.tau_mu, "Prior precision of mu_0")->capture_default_str();
  fit->add_option("--a-eta", f.hyper.a_eta, "Gamma shape, tau_eta prior")->capture_default_str();
  fit->add_option("--b-eta", f.hyper.b_eta, "Gamma rate, tau_eta prior")->capture_default_str();
  fit->add_option("--a-theta", f.hyper.a_theta, "Gamma shape, tau_theta prior")->capture_default_str();
  fit->add_option("--b-theta", f.hyper.b_theta, "Gamma rate, tau_theta prior")->capture_default_str();
  fit->add_option("--a-gamma", f.hyper.a_gamma, "Gamma shape, tau_gamma prior")->capture_default_str();
  fit->add_option("--b-gamma", f.hyper.b_gamma, "Gamma rate, tau_gamma prior")->capture_default_str();
  fit->add_option("--start", f.start, "Start from parameters in a truth.json file")->check(CLI::ExistingFile);
  fit->add_flag("--quiet", f.quiet, "No progress lines");

  SummarizeOptions m;
  auto* summarize_cmd = app.add_subcommand("summarize", "Posterior summaries of a chain directory");
  summarize_cmd->add_option("chain", m.chain, "Chain directory written by fit")
      ->required()
      ->check(CLI::ExistingDirectory);
  summarize_cmd->add_option("-o,--out", m.out, "Output directory [default: the chain directory]");
  summarize_cmd->add_option("--relevance", m.relevance, "relevance.csv to join on node id")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*transform) {
      cmd_transform(t, err);
    } else if (*simulate) {
      cmd_simulate(s, err);
    } else if (*fit) {
      const bool seed_on_command_line = fit->get_option("--seed")->count() > 0;
      if (!fit_config.empty()) apply_config_file(*fit, fit_config);
      cmd_fit(f, !seed_on_command_line, err);
    } else if (*summarize_cmd) {
      cmd_summarize(m, err);
    }
  } catch (const ChainAbort& e) {
    err << "dirnet: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "dirnet: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "dirnet: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "dirnet: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "dirnet: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "dirnet: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace dirnet
