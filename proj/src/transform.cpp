#include "dirnet/transform.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "dirnet/error.hpp"
#include "dirnet/stats.hpp"

namespace dirnet {

RowMask RowMask::from_network(const DynamicNetwork& net) {
  RowMask mask(net.n_periods(), net.n_nodes(), false);
  for (std::size_t t = 0; t < net.n_periods(); ++t) {
    for (std::size_t i = 0; i < net.n_nodes(); ++i) {
      const auto row = net.period(t).row(i);
      mask.set(t, i, std::any_of(row.begin(), row.end(), [](double w) { return w > 0.0; }));
    }
  }
  return mask;
}

std::size_t RowMask::active_count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

DynamicNetwork to_observable(const DynamicNetwork& net) {
  std::vector<Matrix> out;
  out.reserve(net.n_periods());
  for (std::size_t t = 0; t < net.n_periods(); ++t) {
    Matrix m = net.period(t);
    const auto v = m.values();
    const double max = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    if (!(max > 0.0)) throw DataError("period " + net.period_labels()[t] + " has no positive weight");
    for (double& w : m.values()) w /= max;
    out.push_back(std::move(m));
  }
  return net.with_periods(std::move(out), Stage::Observable);
}

ModalRatioEstimate estimate_modal_ratio(std::span<const double> ratios) {
  if (ratios.empty()) throw DataError("empty ratio sample");
  ModalRatioEstimate est;

  std::vector<double> sorted(ratios.begin(), ratios.end());
  std::sort(sorted.begin(), sorted.end());
  const bool all_distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  if (sorted.size() < 10 && all_distinct) {
    est.ratio = quantile_sorted(sorted, 0.5);
    est.median_fallback = true;
    return est;
  }

  // log is monotone, so the log sample stays sorted
  std::vector<double> logs(sorted.size());
  std::transform(sorted.begin(), sorted.end(), logs.begin(), [](double r) { return std::log(r); });
  const double iqr = quantile_sorted(logs, 0.75) - quantile_sorted(logs, 0.25);
  const double fd = 2.0 * iqr / std::cbrt(static_cast<double>(logs.size()));
  const double width = std::max(fd, kMinLogBinWidth);
  est.bin_width = width;

  const double origin = logs.front();
  std::map<long long, std::size_t> counts;
  for (const double x : logs) ++counts[static_cast<long long>(std::floor((x - origin) / width))];

  long long top = 0, second = 0;
  std::size_t top_count = 0, second_count = 0;
  for (const auto& [bin, count] : counts) {  // ascending bins: ties keep the lower bin
    if (count > top_count) {
      second = top;
      second_count = top_count;
      top = bin;
      top_count = count;
    } else if (count > second_count) {
      second = bin;
      second_count = count;
    }
  }
  const auto center = [&](long long bin) { return origin + (static_cast<double>(bin) + 0.5) * width; };
  est.top_bin = {center(top), top_count};
  if (second_count > 0) est.runner_up = {center(second), second_count};

  std::vector<double> in_bin;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    if (static_cast<long long>(std::floor((logs[k] - origin) / width)) == top) {
      in_bin.push_back(sorted[k]);
    }
  }
  est.ratio = quantile_sorted(in_bin, 0.5);
  return est;
}

RescaleResult rescale_to_absolute(const DynamicNetwork& observable) {
  if (observable.stage() != Stage::Observable) {
    throw DataError("rescale_to_absolute expects an observable (D) network");
  }
  const std::size_t n = observable.n_nodes();
  const std::size_t n_periods = observable.n_periods();
  RescaleReport report;
  report.cumulative_factor.assign(n_periods, 1.0);

  for (std::size_t t = 0; t + 1 < n_periods; ++t) {
    const Matrix& a = observable.period(t);
    const Matrix& b = observable.period(t + 1);
    std::vector<double> ratios;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (a(i, j) > 0.0 && b(i, j) > 0.0) ratios.push_back(a(i, j) / b(i, j));
      }
    }
    if (ratios.empty()) {
      throw DataError("periods " + observable.period_labels()[t] + " and " +
                      observable.period_labels()[t + 1] + " share no positive edge");
    }
    const ModalRatioEstimate est = estimate_modal_ratio(ratios);

    TransitionReport tr;
    tr.from_period = t;
    tr.modal_ratio = est.ratio;
    tr.sample_size = ratios.size();
    tr.bin_width = est.bin_width;
    tr.top_bin = est.top_bin;
    tr.runner_up = est.runner_up;
    tr.median_fallback = est.median_fallback;
    tr.ambiguous_mode = est.runner_up.count > 0 &&
                        static_cast<double>(est.runner_up.count) >= 0.9 * static_cast<double>(est.top_bin.count);
    const std::string step = observable.period_labels()[t] + "->" + observable.period_labels()[t + 1];
    if (tr.median_fallback) {
      report.warnings.push_back(step + ": " + std::to_string(ratios.size()) +
                                " distinct ratios, using median");
    }
    if (tr.ambiguous_mode) {
      report.warnings.push_back(step + ": two modal bins within 10% of each other");
    }
    report.transitions.push_back(tr);
    report.cumulative_factor[t + 1] = report.cumulative_factor[t] * est.ratio;
  }

  std::vector<Matrix> out;
  out.reserve(n_periods);
  for (std::size_t t = 0; t < n_periods; ++t) {
    Matrix m = observable.period(t);
    const double c = report.cumulative_factor[t];
    if (c != 1.0) {
      for (double& w : m.values()) w *= c;
    }
    out.push_back(std::move(m));
  }
  return {observable.with_periods(std::move(out), Stage::Absolute), std::move(report)};
}

RelevanceTable relevance(const DynamicNetwork& absolute) {
  if (absolute.stage() != Stage::Absolute) {
    throw DataError("relevance expects an absolute (X) network");
  }
  const std::size_t n = absolute.n_nodes();
  RelevanceTable table;
  table.node_ids = absolute.node_ids();
  table.per_period = Matrix(n, absolute.n_periods());
  table.aggregated.assign(n, 0.0);
  for (std::size_t t = 0; t < absolute.n_periods(); ++t) {
    const Matrix& m = absolute.period(t);
    std::vector<double> r(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        r[i] += m(i, k);
        r[k] += m(i, k);
      }
    }
    for (std::size_t i = 0; i < n; ++i) table.per_period(i, t) = r[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = table.per_period.row(i);
    table.aggregated[i] = std::accumulate(row.begin(), row.end(), 0.0);
  }
  return table;
}

DynamicNetwork top_k_subnetwork(const DynamicNetwork& net, const RelevanceTable& table,
                                std::size_t k) {
  const std::size_t n = net.n_nodes();
  if (k < 1 || k > n) {
    throw ConfigError("top-k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  if (table.node_ids != net.node_ids()) throw DataError("relevance table does not match network");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (table.aggregated[a] != table.aggregated[b]) return table.aggregated[a] > table.aggregated[b];
    return net.node_ids()[a] < net.node_ids()[b];
  });
  std::vector<std::size_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(keep.begin(), keep.end());

  std::vector<NodeId> ids;
  for (const auto i : keep) ids.push_back(net.node_ids()[i]);
  std::vector<Matrix> mats;
  for (const auto& full : net.periods()) {
    Matrix m(k, k);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) m(a, b) = full(keep[a], keep[b]);
    }
    mats.push_back(std::move(m));
  }
  return DynamicNetwork(std::move(ids), net.period_labels(), std::move(mats), net.stage());
}

RelevanceTable restrict_relevance(const RelevanceTable& table, const DynamicNetwork& net) {
  RelevanceTable out;
  out.node_ids = net.node_ids();
  out.per_period = Matrix(net.n_nodes(), table.per_period.cols());
  for (std::size_t a = 0; a < net.n_nodes(); ++a) {
    const auto it = std::find(table.node_ids.begin(), table.node_ids.end(), net.node_ids()[a]);
    if (it == table.node_ids.end()) {
      throw DataError("node " + std::to_string(net.node_ids()[a]) + " missing from relevance table");
    }
    const auto src = static_cast<std::size_t>(it - table.node_ids.begin());
    for (std::size_t t = 0; t < table.per_period.cols(); ++t) out.per_period(a, t) = table.per_period(src, t);
    out.aggregated.push_back(table.aggregated[src]);
  }
  return out;
}

RelativeNetwork to_relative(const DynamicNetwork& absolute, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
  if (absolute.stage() != Stage::Absolute) {
    throw DataError("to_relative expects an absolute (X) network");
  }
  const std::size_t n = absolute.n_nodes();
  RowMask mask = RowMask::from_network(absolute);
  std::vector<Matrix> out;
  for (std::size_t t = 0; t < absolute.n_periods(); ++t) {
    Matrix m = absolute.period(t);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask.active(t, i)) continue;
      auto row = m.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && row[j] == 0.0) row[j] = epsilon;
      }
      const double sum = std::accumulate(row.begin(), row.end(), 0.0);
      for (double& w : row) w /= sum;
    }
    out.push_back(std::move(m));
  }
  return {absolute.with_periods(std::move(out), Stage::Relative), std::move(mask)};
}

double node_entropy(std::span<const double> row) {
  double s = 0.0;
  for (const double y : row) {
    if (y > 0.0) s -= y * std::log(y);
  }
  return s;
}

double herfindahl(std::span<const double> row) {
  double h = 0.0;
  for (const double y : row) h += y * y;
  return h;
}

std::vector<EntropyChange> entropy_change_distribution(const DynamicNetwork& relative,
                                                       const RowMask& mask) {
  if (relative.n_periods() < 2) throw DataError("entropy change needs at least two periods");
  std::vector<EntropyChange> out;
  for (std::size_t t = 0; t + 1 < relative.n_periods(); ++t) {
    for (std::size_t i = 0; i < relative.n_nodes(); ++i) {
      if (!mask.active(t, i) || !mask.active(t + 1, i)) continue;
      const double before = node_entropy(relative.period(t).row(i));
      const double after = node_entropy(relative.period(t + 1).row(i));
      out.push_back({t + 1, relative.node_ids()[i], after - before});
    }
  }
  return out;
}

}  // namespace dirnet
