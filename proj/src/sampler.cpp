#include "dirnet/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dirnet/error.hpp"
#include "dirnet/kernels.hpp"

namespace dirnet {

void ChainConfig::validate() const {
  if (n_iterations == 0) throw ConfigError("iterations must be positive");
  if (n_burnin >= n_iterations) throw ConfigError("burn-in must be smaller than the iteration count");
  if (effective_adapt_window() > n_burnin) throw ConfigError("adaptation window must fit in the burn-in");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (adapt_batch < 1) throw ConfigError("adaptation batch must be >= 1");
  if (!(target_low > 0.0 && target_low < target_high && target_high < 1.0)) {
    throw ConfigError("target acceptance band must satisfy 0 < low < high < 1");
  }
  if (!(initial_proposal_sd > 0.0) || !std::isfinite(initial_proposal_sd)) {
    throw ConfigError("initial proposal sd must be > 0");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

BlockLayout::Block BlockLayout::operator[](std::size_t b) const {
  if (b < n_periods) return {Kind::Mu, b};
  b -= n_periods;
  if (b < n_nodes) return {Kind::Theta, b};
  b -= n_nodes;
  return {Kind::Gamma, b + 1};
}

std::string BlockLayout::name(std::size_t b) const {
  const Block blk = (*this)[b];
  switch (blk.kind) {
    case Kind::Mu: return "mu[" + std::to_string(blk.index) + "]";
    case Kind::Theta: return "theta[" + std::to_string(blk.index) + "]";
    case Kind::Gamma: return "gamma[" + std::to_string(blk.index) + "]";
  }
  return "?";
}

ChainState init_state(const ModelData& data, const ChainConfig& config) {
  return init_state(data, config, ModelParams::zeros(data.n_periods(), data.n_nodes()));
}

ChainState init_state(const ModelData& data, const ChainConfig& config, ModelParams start) {
  if (start.mu.size() != data.n_periods() || start.theta.size() != data.n_nodes() ||
      start.gamma.size() != data.n_nodes()) {
    throw DataError("starting parameters do not match the network");
  }
  ChainState state;
  state.params = std::move(start);
  state.params.enforce_gamma_constraint();
  const std::size_t n_blocks = state.layout().size();
  state.proposal_sd.assign(n_blocks, config.initial_proposal_sd);
  state.accepted.assign(n_blocks, 0);
  state.proposed.assign(n_blocks, 0);
  state.batch_accepted.assign(n_blocks, 0);
  state.batch_proposed.assign(n_blocks, 0);
  state.frozen_accepted.assign(n_blocks, 0);
  state.frozen_proposed.assign(n_blocks, 0);
  state.frozen = config.effective_adapt_window() == 0;
  state.rng.seed(config.seed);
  return state;
}

bool metropolis_accept(double log_ratio, Rng& rng) {
  const double u = std::generate_canonical<double, 53>(rng);
  return std::log(u) < log_ratio;
}

namespace {

double block_value(const ModelParams& p, BlockLayout::Block blk) {
  switch (blk.kind) {
    case BlockLayout::Kind::Mu: return p.mu[blk.index];
    case BlockLayout::Kind::Theta: return p.theta[blk.index];
    case BlockLayout::Kind::Gamma: return p.gamma[blk.index];
  }
  return 0.0;
}

double block_logfc(const ModelParams& p, const ModelData& data, const Hyperparams& hyper,
                   BlockLayout::Block blk, double value, const EvalOptions& opt) {
  switch (blk.kind) {
    case BlockLayout::Kind::Mu: return logfc_mu(p, data, hyper, blk.index, value, opt);
    case BlockLayout::Kind::Theta: return logfc_theta(p, data, hyper, blk.index, value, opt);
    case BlockLayout::Kind::Gamma: return logfc_gamma(p, data, hyper, blk.index, value, opt);
  }
  return 0.0;
}

void set_block(ModelParams& p, BlockLayout::Block blk, double value) {
  switch (blk.kind) {
    case BlockLayout::Kind::Mu: p.mu[blk.index] = value; break;
    case BlockLayout::Kind::Theta: p.theta[blk.index] = value; break;
    case BlockLayout::Kind::Gamma: p.set_free_gamma(blk.index, value); break;
  }
}

}  // namespace

bool mh_update(std::size_t b, ChainState& state, const ModelData& data, const Hyperparams& hyper,
               const EvalOptions& opt) {
  const BlockLayout layout = state.layout();
  if (b >= layout.size()) throw std::out_of_range("block index out of range");
  const BlockLayout::Block blk = layout[b];

  const double current = block_value(state.params, blk);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double proposal = current + state.proposal_sd[b] * normal(state.rng);

  const double lp_current = block_logfc(state.params, data, hyper, blk, current, opt);
  if (!std::isfinite(lp_current)) {
    throw NumericalError("non-finite full conditional of " + layout.name(b) + " at its current value");
  }
  const double lp_proposal = block_logfc(state.params, data, hyper, blk, proposal, opt);
  // a NaN proposal density compares false and is rejected
  const bool accepted = metropolis_accept(lp_proposal - lp_current, state.rng);
  if (accepted) set_block(state.params, blk, proposal);

  ++state.proposed[b];
  ++state.batch_proposed[b];
  if (state.frozen) ++state.frozen_proposed[b];
  if (accepted) {
    ++state.accepted[b];
    ++state.batch_accepted[b];
    if (state.frozen) ++state.frozen_accepted[b];
  }
  return accepted;
}

void gibbs_sweep(ChainState& state, const ModelData& data, const Hyperparams& hyper, const EvalOptions& opt,
                 const DecisionObserver& observer) {
  const std::size_t n_blocks = state.layout().size();
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const bool accepted = mh_update(b, state, data, hyper, opt);
    if (observer) observer(b, accepted);
  }
  state.params.tau_eta = sample_tau_eta(state.params, hyper, state.rng);
  state.params.tau_theta = sample_tau_theta(state.params, hyper, state.rng);
  state.params.tau_gamma = sample_tau_gamma(state.params, hyper, state.rng);
  ++state.iteration;
}

void adapt(ChainState& state, const ChainConfig& config) {
  for (std::size_t b = 0; b < state.proposal_sd.size(); ++b) {
    if (state.batch_proposed[b] > 0) {
      const double rate =
          static_cast<double>(state.batch_accepted[b]) / static_cast<double>(state.batch_proposed[b]);
      double& sd = state.proposal_sd[b];
      if (rate > config.target_high) sd *= kAdaptGrow;
      else if (rate < config.target_low) sd *= kAdaptShrink;
      sd = std::clamp(sd, kMinProposalSd, kMaxProposalSd);
    }
    state.batch_accepted[b] = 0;
    state.batch_proposed[b] = 0;
  }
}

namespace {

std::vector<double> rates(const std::vector<std::uint64_t>& accepted, const std::vector<std::uint64_t>& proposed) {
  std::vector<double> out(accepted.size(), 0.0);
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (proposed[b] > 0) out[b] = static_cast<double>(accepted[b]) / static_cast<double>(proposed[b]);
  }
  return out;
}

}  // namespace

PosteriorSample run_chain(const ModelData& data, const Hyperparams& hyper, const ChainConfig& config,
                          const RunHooks& hooks) {
  config.validate();
  hyper.validate();
  const auto started = std::chrono::steady_clock::now();

  ChainState state = hooks.start ? init_state(data, config, *hooks.start) : init_state(data, config);
  const std::size_t window = config.effective_adapt_window();
  const EvalOptions opt{config.threads};

  PosteriorSample sample;
  const std::size_t n_draws = config.expected_draws();
  sample.mu = Matrix(n_draws, data.n_periods());
  sample.theta = Matrix(n_draws, data.n_nodes());
  sample.gamma = Matrix(n_draws, data.n_nodes());
  sample.tau = Matrix(n_draws, 3);
  sample.iterations.reserve(n_draws);

  for (std::size_t it = 1; it <= config.n_iterations; ++it) {
    try {
      gibbs_sweep(state, data, hyper, opt, hooks.on_decision);
    } catch (const NumericalError& e) {
      throw ChainAbort(it, e.what());
    }
    if (it <= window && it % config.adapt_batch == 0) adapt(state, config);
    if (it == window) state.frozen = true;

    if (it > config.n_burnin && (it - config.n_burnin) % config.thin == 0) {
      const std::size_t d = sample.iterations.size();
      const ModelParams& p = state.params;
      std::copy(p.mu.begin(), p.mu.end(), sample.mu.row(d).begin());
      std::copy(p.theta.begin(), p.theta.end(), sample.theta.row(d).begin());
      std::copy(p.gamma.begin(), p.gamma.end(), sample.gamma.row(d).begin());
      sample.tau(d, 0) = p.tau_eta;
      sample.tau(d, 1) = p.tau_theta;
      sample.tau(d, 2) = p.tau_gamma;
      sample.iterations.push_back(it);
      if (hooks.sink) hooks.sink->write(it, p);
    }
    if (hooks.after_sweep) hooks.after_sweep(state);
  }

  sample.acceptance = rates(state.frozen_accepted, state.frozen_proposed);
  sample.acceptance_overall = rates(state.accepted, state.proposed);
  sample.proposal_sd = state.proposal_sd;
  sample.config = config;
  sample.node_ids = data.node_ids();
  sample.period_labels = data.period_labels();
  sample.kernel = std::string(kernels::isa_name(kernels::active_isa()));
  sample.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sample;
}

}  // namespace dirnet
