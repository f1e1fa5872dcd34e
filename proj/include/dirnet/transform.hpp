#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dirnet/network.hpp"

namespace dirnet {

/// Active-row flags: active(t, i) is false for rows with no outgoing weight,
/// which are left out of the likelihood.
class RowMask {
 public:
  RowMask() = default;
  RowMask(std::size_t n_periods, std::size_t n_nodes, bool active = true)
      : n_periods_(n_periods), n_nodes_(n_nodes), flags_(n_periods * n_nodes, active ? 1 : 0) {}

  /// Active exactly where the row has a positive sum.
  static RowMask from_network(const DynamicNetwork& net);

  std::size_t n_periods() const noexcept { return n_periods_; }
  std::size_t n_nodes() const noexcept { return n_nodes_; }
  bool active(std::size_t t, std::size_t i) const { return flags_[t * n_nodes_ + i] != 0; }
  void set(std::size_t t, std::size_t i, bool active) { flags_[t * n_nodes_ + i] = active ? 1 : 0; }
  /// Per-node flags of period t, usable as a kernel include mask.
  std::span<const std::uint8_t> period(std::size_t t) const {
    return {flags_.data() + t * n_nodes_, n_nodes_};
  }
  std::size_t active_count() const;

  friend bool operator==(const RowMask&, const RowMask&) = default;

 private:
  std::size_t n_periods_ = 0;
  std::size_t n_nodes_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// Divides every period by its own maximum. Throws DataError on an all-zero period.
DynamicNetwork to_observable(const DynamicNetwork& net);

struct ModalBin {
  double center = 0.0;  // log-ratio midpoint
  std::size_t count = 0;
};

/// Evidence for one t -> t+1 rescaling step.
struct TransitionReport {
  std::size_t from_period = 0;
  double modal_ratio = 1.0;  // d(t) / d(t+1) of the unchanged-exposure mode
  std::size_t sample_size = 0;
  double bin_width = 0.0;  // log-ratio units
  ModalBin top_bin;
  ModalBin runner_up;  // count 0 if the histogram has a single bin
  bool median_fallback = false;
  bool ambiguous_mode = false;  // runner-up within 10% of the top count
};

struct RescaleReport {
  std::vector<TransitionReport> transitions;
  std::vector<double> cumulative_factor;  // per period; [0] == 1
  std::vector<std::string> warnings;
};

struct ModalRatioEstimate {
  double ratio = 1.0;
  double bin_width = 0.0;
  ModalBin top_bin;
  ModalBin runner_up;
  bool median_fallback = false;
};

/// Mode of a sample of positive ratios: Freedman-Diaconis histogram of the
/// log ratios, modal bin, then the median of the raw ratios in that bin.
/// Fewer than 10 all-distinct ratios fall back to the overall median.
ModalRatioEstimate estimate_modal_ratio(std::span<const double> ratios);

/// Smallest log-ratio bin width; ratios closer than this count as equal.
inline constexpr double kMinLogBinWidth = 1e-9;

struct RescaleResult {
  DynamicNetwork network;  // stage X
  RescaleReport report;
};

/// Chains modal ratios across consecutive periods so that the typical
/// unchanged exposure keeps its value; period 0 is the anchor.
RescaleResult rescale_to_absolute(const DynamicNetwork& observable);

struct RelevanceTable {
  std::vector<NodeId> node_ids;
  Matrix per_period;               // n_nodes x n_periods
  std::vector<double> aggregated;  // sum over periods
};

/// Row sum plus column sum per node and period.
RelevanceTable relevance(const DynamicNetwork& absolute);

/// Induced subnetwork on the k nodes of largest aggregated relevance (ties:
/// smaller original id first). Retained nodes keep their relative order.
DynamicNetwork top_k_subnetwork(const DynamicNetwork& net, const RelevanceTable& table,
                                std::size_t k);

/// Restricts a relevance table to the node set of `net`, in its order.
RelevanceTable restrict_relevance(const RelevanceTable& table, const DynamicNetwork& net);

struct RelativeNetwork {
  DynamicNetwork network;  // stage Y
  RowMask mask;
};

inline constexpr double kDefaultEpsilon = 1e-8;

/// Row-normalizes exposures. Zero off-diagonal entries of rows with positive
/// mass are first raised to `epsilon`; all-zero rows stay zero and are masked.
RelativeNetwork to_relative(const DynamicNetwork& absolute, double epsilon = kDefaultEpsilon);

/// Shannon entropy in nats, with 0 log 0 = 0.
double node_entropy(std::span<const double> row);

double herfindahl(std::span<const double> row);

struct EntropyChange {
  std::size_t period = 0;  // later period of the transition
  NodeId node = 0;
  double delta = 0.0;
};

/// S_i(t+1) - S_i(t) for every node active in both periods.
std::vector<EntropyChange> entropy_change_distribution(const DynamicNetwork& relative,
                                                       const RowMask& mask);

}  // namespace dirnet
