#include "dirnet/io.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "dirnet/error.hpp"
#include "text.hpp"

#ifndef DIRNET_CODE_ID
#define DIRNET_CODE_ID "unknown"
#endif

namespace dirnet {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string code_id() { return DIRNET_CODE_ID; }

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

ojson read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad " + path.filename().string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

std::string na_or(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

ojson null_or(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

// non-finite doubles have no JSON literal
ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

void draw_header(std::ofstream& out) { out << "iteration,index,value\n"; }

void draw_rows(std::ofstream& out, std::size_t iteration, const std::vector<double>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << iteration << ',' << k << ',' << format_double(values[k]) << '\n';
  }
}

ojson config_json(const ChainConfig& c) {
  ojson j;
  j["n_iterations"] = c.n_iterations;
  j["n_burnin"] = c.n_burnin;
  j["thin"] = c.thin;
  j["adapt_window"] = c.effective_adapt_window();
  j["adapt_batch"] = c.adapt_batch;
  j["target_acceptance"] = {c.target_low, c.target_high};
  j["seed"] = c.seed;
  j["initial_proposal_sd"] = c.initial_proposal_sd;
  j["threads"] = c.threads;
  return j;
}

ChainConfig config_from_json(const ojson& j) {
  ChainConfig c;
  c.n_iterations = j.at("n_iterations").get<std::size_t>();
  c.n_burnin = j.at("n_burnin").get<std::size_t>();
  c.thin = j.at("thin").get<std::size_t>();
  c.adapt_window = j.at("adapt_window").get<std::size_t>();
  c.adapt_batch = j.at("adapt_batch").get<std::size_t>();
  c.target_low = j.at("target_acceptance").at(0).get<double>();
  c.target_high = j.at("target_acceptance").at(1).get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.initial_proposal_sd = j.at("initial_proposal_sd").get<double>();
  c.threads = j.at("threads").get<int>();
  return c;
}

ojson hyper_json(const Hyperparams& h) {
  ojson j;
  j["tau_mu"] = h.tau_mu;
  j["a_eta"] = h.a_eta;
  j["b_eta"] = h.b_eta;
  j["a_theta"] = h.a_theta;
  j["b_theta"] = h.b_theta;
  j["a_gamma"] = h.a_gamma;
  j["b_gamma"] = h.b_gamma;
  return j;
}

ojson manifest_base(const std::vector<NodeId>& ids, const std::vector<std::string>& labels,
                    const ChainConfig& config, const RunInfo& info) {
  ojson m;
  m["format"] = "dirnet-chain";
  m["code_id"] = code_id();
  m["created"] = info.created;
  m["input"] = info.input;
  m["n_nodes"] = ids.size();
  m["n_periods"] = labels.size();
  m["node_ids"] = ids;
  m["period_labels"] = labels;
  m["seed"] = config.seed;
  m["seed_source"] = info.seed_source;
  m["config"] = config_json(config);
  m["hyperparams"] = hyper_json(info.hyper);
  m["files"] = {{"mu", "mu.csv"}, {"theta", "theta.csv"}, {"gamma", "gamma.csv"}, {"tau", "tau.csv"}};
  m["tau_index"] = {"eta", "theta", "gamma"};
  return m;
}

}  // namespace

ChainWriter::ChainWriter(const fs::path& dir) {
  fs::create_directories(dir);
  mu_ = open_out(dir / "mu.csv");
  theta_ = open_out(dir / "theta.csv");
  gamma_ = open_out(dir / "gamma.csv");
  tau_ = open_out(dir / "tau.csv");
  for (auto* out : {&mu_, &theta_, &gamma_, &tau_}) {
    draw_header(*out);
    out->flush();
  }
}

void ChainWriter::write(std::size_t iteration, const ModelParams& params) {
  draw_rows(mu_, iteration, params.mu);
  draw_rows(theta_, iteration, params.theta);
  draw_rows(gamma_, iteration, params.gamma);
  draw_rows(tau_, iteration, {params.tau_eta, params.tau_theta, params.tau_gamma});
  for (auto* out : {&mu_, &theta_, &gamma_, &tau_}) {
    out->flush();
    if (!*out) throw DataError("failed writing chain draws");
  }
}

void write_chain_manifest_started(const fs::path& dir, const ModelData& data, const ChainConfig& config,
                                  const RunInfo& info) {
  fs::create_directories(dir);
  ojson m = manifest_base(data.node_ids(), data.period_labels(), config, info);
  m["status"] = "running";
  write_json(dir / "manifest.json", m);
}

void write_chain_results(const fs::path& dir, const PosteriorSample& sample, const RunInfo& info) {
  fs::create_directories(dir);
  const BlockLayout layout{sample.period_labels.size(), sample.node_ids.size()};
  {
    std::ofstream out = open_out(dir / "acceptance.csv");
    out << "block,name,proposal_sd,acceptance,acceptance_overall\n";
    for (std::size_t b = 0; b < sample.acceptance.size(); ++b) {
      out << b << ',' << layout.name(b) << ',' << format_double(sample.proposal_sd[b]) << ','
          << format_double(sample.acceptance[b]) << ',' << format_double(sample.acceptance_overall[b]) << '\n';
    }
  }

  ojson m = manifest_base(sample.node_ids, sample.period_labels, sample.config, info);
  m["status"] = "complete";
  m["n_draws"] = sample.n_draws();
  m["kernel"] = sample.kernel;
  m["wall_seconds"] = sample.wall_seconds;
  if (!sample.acceptance.empty()) {
    std::vector<double> sorted = sample.acceptance;
    std::sort(sorted.begin(), sorted.end());
    const auto in_band = std::count_if(sorted.begin(), sorted.end(), [&](double r) {
      return r >= sample.config.target_low && r <= sample.config.target_high;
    });
    m["acceptance"] = {{"min", sorted.front()},
                       {"median", sorted[sorted.size() / 2]},
                       {"max", sorted.back()},
                       {"fraction_in_target", static_cast<double>(in_band) / static_cast<double>(sorted.size())},
                       {"file", "acceptance.csv"}};
  }
  write_json(dir / "manifest.json", m);
}

namespace {

// Fills a draws x width matrix from `iteration,index,value` rows.
Matrix read_draw_file(const fs::path& path, std::size_t width, std::vector<std::size_t>& iterations, bool define) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "iteration,index,value") {
    throw DataError(path.filename().string() + ": missing header");
  }
  std::map<std::size_t, std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, ',');
    if (cols.size() != 3) throw DataError(path.filename().string() + " line " + std::to_string(lineno) + ": malformed");
    const auto it = text::parse_int<std::size_t>(cols[0]);
    const auto k = text::parse_int<std::size_t>(cols[1]);
    if (k >= width) throw DataError(path.filename().string() + " line " + std::to_string(lineno) + ": index out of range");
    auto& row = rows[it];
    if (row.empty()) row.assign(width, std::numeric_limits<double>::quiet_NaN());
    row[k] = parse_double(cols[2]);
  }
  // an interrupted run may leave a trailing incomplete draw
  if (!rows.empty() && std::any_of(rows.rbegin()->second.begin(), rows.rbegin()->second.end(),
                                   [](double v) { return std::isnan(v); })) {
    rows.erase(std::prev(rows.end()));
  }
  if (define) {
    iterations.clear();
    for (const auto& [it, row] : rows) iterations.push_back(it);
  }
  const std::size_t n = std::min(rows.size(), iterations.size());
  Matrix m(n, width);
  std::size_t d = 0;
  for (const auto& [it, row] : rows) {
    if (d >= n) break;
    if (it != iterations[d]) throw DataError(path.filename().string() + ": iterations differ from mu.csv");
    std::copy(row.begin(), row.end(), m.row(d).begin());
    ++d;
  }
  return m;
}

Matrix truncate(const Matrix& m, std::size_t rows) {
  if (m.rows() == rows) return m;
  Matrix out(rows, m.cols());
  for (std::size_t d = 0; d < rows; ++d) std::copy(m.row(d).begin(), m.row(d).end(), out.row(d).begin());
  return out;
}

}  // namespace

PosteriorSample read_chain_dir(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw DataError("no chain manifest in " + dir.string());
  const ojson m = read_json(dir / "manifest.json");
  PosteriorSample s;
  try {
    s.node_ids = m.at("node_ids").get<std::vector<NodeId>>();
    s.period_labels = m.at("period_labels").get<std::vector<std::string>>();
    s.config = config_from_json(m.at("config"));
    if (m.contains("kernel")) s.kernel = m.at("kernel").get<std::string>();
    if (m.contains("wall_seconds")) s.wall_seconds = m.at("wall_seconds").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad chain manifest: " + std::string(e.what()));
  }
  const std::size_t n = s.node_ids.size();
  const std::size_t periods = s.period_labels.size();

  s.mu = read_draw_file(dir / "mu.csv", periods, s.iterations, true);
  s.theta = read_draw_file(dir / "theta.csv", n, s.iterations, false);
  s.gamma = read_draw_file(dir / "gamma.csv", n, s.iterations, false);
  s.tau = read_draw_file(dir / "tau.csv", 3, s.iterations, false);
  const std::size_t draws = std::min({s.mu.rows(), s.theta.rows(), s.gamma.rows(), s.tau.rows()});
  if (draws == 0) throw DataError("chain directory " + dir.string() + " holds no draws");
  s.iterations.resize(draws);
  s.mu = truncate(s.mu, draws);
  s.theta = truncate(s.theta, draws);
  s.gamma = truncate(s.gamma, draws);
  s.tau = truncate(s.tau, draws);

  if (fs::exists(dir / "acceptance.csv")) {
    std::ifstream in = open_in(dir / "acceptance.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      const auto cols = text::split(line, ',');
      if (cols.size() != 5) throw DataError("acceptance.csv: malformed row");
      s.proposal_sd.push_back(parse_double(cols[2]));
      s.acceptance.push_back(parse_double(cols[3]));
      s.acceptance_overall.push_back(parse_double(cols[4]));
    }
  }
  return s;
}

namespace {

ojson scalar_json(const ScalarSummary& s) {
  ojson j;
  j["name"] = s.name;
  j["mean"] = number(s.mean);
  j["variance"] = number(s.variance);
  j["q025"] = null_or(s.lo);
  j["q975"] = null_or(s.hi);
  j["rhat"] = null_or(s.rhat);
  j["ess"] = null_or(s.ess);
  return j;
}

ojson scalars_json(const std::vector<ScalarSummary>& v) {
  ojson a = ojson::array();
  for (const auto& s : v) a.push_back(scalar_json(s));
  return a;
}

}  // namespace

void write_summary_dir(const fs::path& dir, const Summary& summary) {
  fs::create_directories(dir);
  ojson j;
  j["n_draws"] = summary.n_draws;
  j["quantile_rule"] = "linear interpolation between order statistics (type 7)";
  j["interval"] = "equal-tailed 95%";
  j["mu"] = scalars_json(summary.mu);
  j["theta"] = scalars_json(summary.theta);
  j["gamma"] = scalars_json(summary.gamma);
  j["variance"] = scalars_json({summary.var_eta, summary.var_theta, summary.var_gamma});
  ojson acc = ojson::array();
  for (const auto& a : summary.acceptance) {
    acc.push_back({{"name", a.name},
                   {"proposal_sd", a.proposal_sd},
                   {"acceptance", a.acceptance},
                   {"acceptance_overall", a.acceptance_overall}});
  }
  j["acceptance"] = acc;
  j["rank_correlation"] = {{"theta_gamma", null_or(summary.rho_theta_gamma)},
                           {"theta_relevance", null_or(summary.rho_theta_relevance)},
                           {"gamma_relevance", null_or(summary.rho_gamma_relevance)}};
  j["warnings"] = summary.warnings;
  write_json(dir / "summary.json", j);

  {
    std::ofstream out = open_out(dir / "drift.csv");
    out << "t,label,mean,lo,hi\n";
    for (const auto& r : summary.drift) {
      out << r.t << ',' << r.label << ',' << format_double(r.mean) << ',' << na_or(r.lo) << ',' << na_or(r.hi) << '\n';
    }
  }
  {
    std::ofstream out = open_out(dir / "nodes.csv");
    out << "node,theta_mean,theta_var,gamma_mean,gamma_var,relevance\n";
    for (const auto& r : summary.nodes) {
      out << r.node << ',' << format_double(r.theta_mean) << ',' << format_double(r.theta_var) << ','
          << format_double(r.gamma_mean) << ',' << format_double(r.gamma_var) << ',' << na_or(r.relevance) << '\n';
    }
  }
}

void write_relevance_csv(const fs::path& path, const RelevanceTable& table,
                         const std::vector<std::string>& period_labels) {
  if (table.per_period.cols() != period_labels.size()) throw std::invalid_argument("period label count mismatch");
  std::ofstream out = open_out(path);
  out << "node,relevance";
  for (const auto& label : period_labels) out << ',' << label;
  out << '\n';
  for (std::size_t i = 0; i < table.node_ids.size(); ++i) {
    out << table.node_ids[i] << ',' << format_double(table.aggregated[i]);
    for (std::size_t t = 0; t < period_labels.size(); ++t) out << ',' << format_double(table.per_period(i, t));
    out << '\n';
  }
}

RelevanceTable read_relevance_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = text::split(line, ',');
  if (header.size() < 2 || header[0] != "node" || header[1] != "relevance") {
    throw DataError(path.string() + ": header must start with node,relevance");
  }
  const std::size_t periods = header.size() - 2;
  std::vector<std::vector<double>> per_period;
  RelevanceTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, ',');
    if (cols.size() != header.size()) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    table.node_ids.push_back(text::parse_int<NodeId>(cols[0]));
    table.aggregated.push_back(parse_double(cols[1]));
    std::vector<double> row(periods);
    for (std::size_t t = 0; t < periods; ++t) row[t] = parse_double(cols[t + 2]);
    per_period.push_back(std::move(row));
  }
  table.per_period = Matrix(table.node_ids.size(), periods);
  for (std::size_t i = 0; i < per_period.size(); ++i) {
    std::copy(per_period[i].begin(), per_period[i].end(), table.per_period.row(i).begin());
  }
  return table;
}

void write_rescale_json(const fs::path& path, const RescaleReport& report,
                        const std::vector<std::string>& period_labels) {
  ojson j;
  ojson transitions = ojson::array();
  for (const auto& tr : report.transitions) {
    ojson t;
    t["from"] = period_labels.at(tr.from_period);
    t["to"] = period_labels.at(tr.from_period + 1);
    t["modal_ratio"] = number(tr.modal_ratio);
    t["sample_size"] = tr.sample_size;
    t["log_bin_width"] = number(tr.bin_width);
    t["top_bin"] = {{"log_center", number(tr.top_bin.center)}, {"count", tr.top_bin.count}};
    t["runner_up_bin"] = {{"log_center", number(tr.runner_up.center)}, {"count", tr.runner_up.count}};
    t["median_fallback"] = tr.median_fallback;
    t["ambiguous_mode"] = tr.ambiguous_mode;
    transitions.push_back(t);
  }
  j["transitions"] = transitions;
  ojson factors = ojson::array();
  for (std::size_t t = 0; t < report.cumulative_factor.size(); ++t) {
    factors.push_back({{"period", period_labels.at(t)}, {"factor", number(report.cumulative_factor[t])}});
  }
  j["cumulative_factor"] = factors;
  j["warnings"] = report.warnings;
  write_json(path, j);
}

void write_entropy_change_csv(const fs::path& path, const std::vector<EntropyChange>& changes,
                              const std::vector<std::string>& period_labels) {
  std::ofstream out = open_out(path);
  out << "period,node,delta_entropy\n";
  for (const auto& c : changes) {
    out << period_labels.at(c.period) << ',' << c.node << ',' << format_double(c.delta) << '\n';
  }
}

void write_truth_json(const fs::path& path, const ModelParams& truth, std::uint64_t seed) {
  ojson j;
  j["seed"] = seed;
  j["n_nodes"] = truth.n_nodes();
  j["n_periods"] = truth.n_periods();
  j["mu"] = truth.mu;
  j["theta"] = truth.theta;
  j["gamma"] = truth.gamma;
  j["tau_eta"] = truth.tau_eta;
  j["tau_theta"] = truth.tau_theta;
  j["tau_gamma"] = truth.tau_gamma;
  write_json(path, j);
}

ModelParams read_truth_json(const fs::path& path) {
  const ojson j = read_json(path);
  try {
    ModelParams p;
    p.mu = j.at("mu").get<std::vector<double>>();
    p.theta = j.at("theta").get<std::vector<double>>();
    p.gamma = j.at("gamma").get<std::vector<double>>();
    p.tau_eta = j.at("tau_eta").get<double>();
    p.tau_theta = j.at("tau_theta").get<double>();
    p.tau_gamma = j.at("tau_gamma").get<double>();
    if (p.theta.size() != p.gamma.size()) throw DataError("truth: theta and gamma lengths differ");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad truth file: " + std::string(e.what()));
  }
}

}  // namespace dirnet
