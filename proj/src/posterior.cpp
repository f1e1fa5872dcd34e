#include "dirnet/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "dirnet/error.hpp"
#include "dirnet/stats.hpp"

namespace dirnet {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

std::vector<double> reciprocal(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return 1.0 / x; });
  return out;
}

}  // namespace

std::vector<double> column(const Matrix& draws, std::size_t j) {
  std::vector<double> out(draws.rows());
  for (std::size_t d = 0; d < draws.rows(); ++d) out[d] = draws(d, j);
  return out;
}

ScalarSummary summarize_scalar(std::string name, std::span<const double> draws) {
  if (draws.empty()) throw DataError("no draws for " + name);
  ScalarSummary s;
  s.name = std::move(name);
  s.mean = mean_of(draws);
  s.variance = variance_of(draws, s.mean);
  if (draws.size() >= kMinDrawsForQuantiles) {
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    s.lo = quantile_sorted(sorted, 0.025);
    s.hi = quantile_sorted(sorted, 0.975);
  }
  if (draws.size() >= 4) {
    const double r = split_rhat(draws);
    if (std::isfinite(r)) s.rhat = r;
    s.ess = effective_sample_size(draws);
  }
  return s;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k + 1;
    while (end < order.size() && x[order[end]] == x[order[k]]) ++end;
    const double r = (static_cast<double>(k + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t m = k; m < end; ++m) ranks[order[m]] = r;
    k = end;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson needs equal lengths >= 2");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation undefined for a constant vector");
  return sxy / std::sqrt(sxx * syy);
}

double rank_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("rank correlation needs equal lengths");
  if (x.size() < 3) throw std::invalid_argument("rank correlation needs at least 3 values");
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  return std::clamp(pearson(rx, ry), -1.0, 1.0);
}

double split_rhat(const std::vector<std::span<const double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("no chains");
  const std::size_t n = chains.front().size() / 2;
  if (n < 2) throw std::invalid_argument("chains too short for split R-hat");
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    if (c.size() / 2 != n) throw std::invalid_argument("chains must have equal length");
    // odd lengths drop the middle draw
    halves.push_back(c.first(n));
    halves.push_back(c.last(n));
  }
  const auto m = static_cast<double>(halves.size());
  const auto nd = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    const double mu = mean_of(h);
    means.push_back(mu);
    w += variance_of(h, mu);
  }
  w /= m;
  const double grand = mean_of(means);
  const double b = nd * variance_of(means, grand);
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  if (w == 0.0) return var_plus == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(var_plus / w);
}

double split_rhat(std::span<const double> chain) { return split_rhat(std::vector{chain}); }

double effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 4) throw std::invalid_argument("chain too short for ESS");
  const double mu = mean_of(chain);
  double c0 = 0.0;
  for (const double x : chain) c0 += (x - mu) * (x - mu);
  c0 /= static_cast<double>(n);
  if (c0 == 0.0) return static_cast<double>(n);

  auto rho = [&](std::size_t lag) {
    double c = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) c += (chain[k] - mu) * (chain[k + lag] - mu);
    return c / static_cast<double>(n) / c0;
  };
  // Geyer: pair sums Gamma_m = rho(2m) + rho(2m+1), positive and monotone
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double g = rho(2 * m) + rho(2 * m + 1);
    if (g <= 0.0) break;
    g = std::min(g, prev);
    tau += 2.0 * g;
    prev = g;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

Summary summarize(const PosteriorSample& sample, const RelevanceTable* relevance) {
  const std::size_t draws = sample.n_draws();
  if (draws == 0) throw DataError("posterior sample has no draws");
  Summary out;
  out.n_draws = draws;
  if (draws < kMinDrawsForQuantiles) {
    out.warnings.push_back("only " + std::to_string(draws) + " draws (< " + std::to_string(kMinDrawsForQuantiles) +
                           "); credible intervals not reported");
  }
  const std::size_t periods = sample.mu.cols();
  const std::size_t n = sample.theta.cols();

  for (std::size_t t = 0; t < periods; ++t) {
    out.mu.push_back(summarize_scalar("mu[" + std::to_string(t) + "]", column(sample.mu, t)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.theta.push_back(summarize_scalar("theta[" + std::to_string(i) + "]", column(sample.theta, i)));
    out.gamma.push_back(summarize_scalar("gamma[" + std::to_string(i) + "]", column(sample.gamma, i)));
  }
  out.var_eta = summarize_scalar("var_eta", reciprocal(column(sample.tau, 0)));
  out.var_theta = summarize_scalar("var_theta", reciprocal(column(sample.tau, 1)));
  out.var_gamma = summarize_scalar("var_gamma", reciprocal(column(sample.tau, 2)));

  const BlockLayout layout{periods, n};
  for (std::size_t b = 0; b < sample.acceptance.size() && b < layout.size(); ++b) {
    out.acceptance.push_back({layout.name(b), b < sample.proposal_sd.size() ? sample.proposal_sd[b] : 0.0,
                              sample.acceptance[b],
                              b < sample.acceptance_overall.size() ? sample.acceptance_overall[b] : 0.0});
  }

  for (std::size_t t = 0; t < periods; ++t) {
    const std::string label = t < sample.period_labels.size() ? sample.period_labels[t] : std::to_string(t);
    out.drift.push_back({t, label, out.mu[t].mean, out.mu[t].lo, out.mu[t].hi});
  }

  std::vector<double> rel(n, 0.0);
  if (relevance) {
    std::map<NodeId, double> by_id;
    for (std::size_t k = 0; k < relevance->node_ids.size(); ++k) by_id[relevance->node_ids[k]] = relevance->aggregated[k];
    std::vector<NodeId> missing;
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = by_id.find(sample.node_ids.at(i));
      if (it == by_id.end()) {
        missing.push_back(sample.node_ids[i]);
      } else {
        rel[i] = it->second;
        by_id.erase(it);
      }
    }
    if (!missing.empty() || !by_id.empty()) {
      std::string msg = "relevance node set does not match the chain:";
      if (!missing.empty()) {
        msg += " missing from relevance:";
        for (const NodeId id : missing) msg += " " + std::to_string(id);
      }
      if (!by_id.empty()) {
        msg += " not in chain:";
        for (const auto& [id, v] : by_id) msg += " " + std::to_string(id);
      }
      throw DataError(msg);
    }
  }

  std::vector<double> theta_means(n), gamma_means(n);
  for (std::size_t i = 0; i < n; ++i) {
    NodeRow row;
    row.node = i < sample.node_ids.size() ? sample.node_ids[i] : static_cast<NodeId>(i);
    row.theta_mean = theta_means[i] = out.theta[i].mean;
    row.theta_var = out.theta[i].variance;
    row.gamma_mean = gamma_means[i] = out.gamma[i].mean;
    row.gamma_var = out.gamma[i].variance;
    if (relevance) row.relevance = rel[i];
    out.nodes.push_back(row);
  }

  auto try_rho = [&](std::span<const double> a, std::span<const double> b, const char* what) -> std::optional<double> {
    try {
      return rank_correlation(a, b);
    } catch (const DataError&) {
      out.warnings.push_back(std::string("rank correlation ") + what + " undefined (constant input)");
    } catch (const std::invalid_argument&) {
    }
    return std::nullopt;
  };
  out.rho_theta_gamma = try_rho(theta_means, gamma_means, "theta/gamma");
  if (relevance) {
    out.rho_theta_relevance = try_rho(theta_means, rel, "theta/relevance");
    out.rho_gamma_relevance = try_rho(gamma_means, rel, "gamma/relevance");
  }
  return out;
}

}  // namespace dirnet
