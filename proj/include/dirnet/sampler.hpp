#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dirnet/model.hpp"

namespace dirnet {

struct ChainConfig {
  std::size_t n_iterations = 400000;
  std::size_t n_burnin = 200000;
  std::size_t thin = 20;
  /// Sweeps (from the start) during which proposal scales adapt; unset
  /// means the first half of the burn-in.
  std::optional<std::size_t> adapt_window;
  std::size_t adapt_batch = 100;
  double target_low = 0.22;
  double target_high = 0.30;
  std::uint64_t seed = 0;
  double initial_proposal_sd = 0.1;
  int threads = 1;

  std::size_t effective_adapt_window() const { return adapt_window.value_or(n_burnin / 2); }
  std::size_t expected_draws() const { return (n_iterations - n_burnin) / thin; }
  void validate() const;
};

/// Metropolis-Hastings blocks in sweep order: mu[0..T), theta[0..N),
/// gamma[1..N).
struct BlockLayout {
  std::size_t n_periods = 0;
  std::size_t n_nodes = 0;

  enum class Kind { Mu, Theta, Gamma };
  struct Block {
    Kind kind;
    std::size_t index;  // period for Mu, node for Theta/Gamma
  };

  std::size_t size() const noexcept { return n_periods + 2 * n_nodes - 1; }
  Block operator[](std::size_t b) const;
  std::string name(std::size_t b) const;
};

struct ChainState {
  ModelParams params;
  std::vector<double> proposal_sd;  // one per MH block
  std::vector<std::uint64_t> accepted;
  std::vector<std::uint64_t> proposed;
  std::vector<std::uint64_t> batch_accepted;  // reset after each adaptation
  std::vector<std::uint64_t> batch_proposed;
  std::vector<std::uint64_t> frozen_accepted;  // since proposal scales froze
  std::vector<std::uint64_t> frozen_proposed;
  std::size_t iteration = 0;
  bool frozen = false;  // proposal scales fixed
  Rng rng;

  BlockLayout layout() const { return {params.n_periods(), params.n_nodes()}; }
};

/// Zero drift and effects, unit precisions, initial proposal scales.
ChainState init_state(const ModelData& data, const ChainConfig& config);
/// Same, starting from given parameters (gamma constraint is re-applied).
ChainState init_state(const ModelData& data, const ChainConfig& config, ModelParams start);

/// log u < log_ratio for u ~ U[0,1).
bool metropolis_accept(double log_ratio, Rng& rng);

/// One random-walk Metropolis step on block `b`. Throws NumericalError if the
/// current value has a non-finite full conditional.
bool mh_update(std::size_t b, ChainState& state, const ModelData& data, const Hyperparams& hyper,
               const EvalOptions& opt = {});

using DecisionObserver = std::function<void(std::size_t block, bool accepted)>;

/// All MH blocks in layout order, then the three conjugate precision draws.
void gibbs_sweep(ChainState& state, const ModelData& data, const Hyperparams& hyper,
                 const EvalOptions& opt = {}, const DecisionObserver& observer = {});

/// Batch rule: rate above the target band scales sd by 1.25, below by 0.8,
/// clamped to [1e-6, 1e3]; batch counters reset.
void adapt(ChainState& state, const ChainConfig& config);

inline constexpr double kAdaptGrow = 1.25;
inline constexpr double kAdaptShrink = 0.8;
inline constexpr double kMinProposalSd = 1e-6;
inline constexpr double kMaxProposalSd = 1e3;

/// Thinned draws in memory. Row d of each matrix is draw d.
struct PosteriorSample {
  std::vector<std::size_t> iterations;
  Matrix mu;     // draws x T
  Matrix theta;  // draws x N
  Matrix gamma;  // draws x N
  Matrix tau;    // draws x 3 (eta, theta, gamma)
  std::vector<double> acceptance;  // per MH block, after proposal scales froze
  std::vector<double> acceptance_overall;
  std::vector<double> proposal_sd;
  ChainConfig config;
  std::vector<NodeId> node_ids;
  std::vector<std::string> period_labels;
  std::string kernel;
  double wall_seconds = 0.0;

  std::size_t n_draws() const noexcept { return iterations.size(); }
};

/// Receives each retained draw as it is produced.
class DrawSink {
 public:
  virtual ~DrawSink() = default;
  virtual void write(std::size_t iteration, const ModelParams& params) = 0;
};

struct RunHooks {
  DrawSink* sink = nullptr;
  DecisionObserver on_decision;
  std::function<void(const ChainState&)> after_sweep;
  std::optional<ModelParams> start;
};

/// Runs the full schedule: adapt during the window, freeze, discard burn-in,
/// keep every thin-th sweep. Deterministic given data, config and seed.
/// Throws ChainAbort on a non-finite density.
PosteriorSample run_chain(const ModelData& data, const Hyperparams& hyper, const ChainConfig& config,
                          const RunHooks& hooks = {});

}  // namespace dirnet
