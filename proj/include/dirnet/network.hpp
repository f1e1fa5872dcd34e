#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dirnet/matrix.hpp"

namespace dirnet {

using NodeId = std::int64_t;

/// Pipeline stage a network's weights belong to.
///   Raw: weights as read from disk (scaled, origin unknown)
///   Observable (D): each period divided by its own maximum
///   Absolute (X): observable weights rescaled to be comparable across periods
///   Relative (Y): rows normalized onto the probability simplex
enum class Stage { Raw, Observable, Absolute, Relative };

std::string_view stage_tag(Stage stage) noexcept;
Stage stage_from_tag(std::string_view tag);

/// One row of an edge-list file.
struct ExposureRecord {
  std::size_t period = 0;
  NodeId lender = 0;
  NodeId borrower = 0;
  double weight = 0.0;
};

/// A sequence of T dense N x N nonnegative weight matrices over a fixed node
/// set. Immutable once built; diagonals are zero in every period.
class DynamicNetwork {
 public:
  /// Validates shape, zero diagonals and nonnegativity. Throws DataError.
  DynamicNetwork(std::vector<NodeId> node_ids, std::vector<std::string> period_labels,
                 std::vector<Matrix> periods, Stage stage);

  std::size_t n_nodes() const noexcept { return node_ids_.size(); }
  std::size_t n_periods() const noexcept { return periods_.size(); }
  Stage stage() const noexcept { return stage_; }

  const Matrix& period(std::size_t t) const { return periods_.at(t); }
  const std::vector<Matrix>& periods() const noexcept { return periods_; }
  const std::vector<NodeId>& node_ids() const noexcept { return node_ids_; }
  const std::vector<std::string>& period_labels() const noexcept { return period_labels_; }

  /// Dense index of an original node id; throws DataError if unknown.
  std::size_t index_of(NodeId id) const;

  /// Same labels and node set, new weights and stage.
  DynamicNetwork with_periods(std::vector<Matrix> periods, Stage stage) const;

  friend bool operator==(const DynamicNetwork&, const DynamicNetwork&) = default;

 private:
  std::vector<NodeId> node_ids_;
  std::vector<std::string> period_labels_;
  std::vector<Matrix> periods_;
  Stage stage_;
};

struct CsvFormat {
  char delimiter = ',';
};

/// Reads `period,lender,borrower,weight` records. Node ids are remapped to
/// dense indices in ascending id order; periods must be contiguous from 0.
/// Zero-weight rows are accepted and leave the entry at 0.
DynamicNetwork parse_edge_list(std::istream& in, const CsvFormat& format = {});
DynamicNetwork read_edge_list(const std::filesystem::path& path, const CsvFormat& format = {});

/// Writes every strictly positive entry as one record, in (period, lender,
/// borrower) dense order, with shortest round-trip decimal weights.
void write_edge_list(const DynamicNetwork& net, std::ostream& out);

struct PeriodStats {
  std::size_t edge_count = 0;
  double total_weight = 0.0;
  double relative_total = 0.0;  // total_weight / total_weight of period 0
};

std::vector<PeriodStats> network_stats(const DynamicNetwork& net);

/// Directory layout: manifest.json plus one headerless dense CSV per period
/// (`period_0000.csv`, ...), rows in manifest node order.
void write_network_dir(const DynamicNetwork& net, const std::filesystem::path& dir);
DynamicNetwork read_network_dir(const std::filesystem::path& dir);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace dirnet
