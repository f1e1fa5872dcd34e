#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirnet/sampler.hpp"
#include "dirnet/transform.hpp"

namespace dirnet {

/// Fewer draws than this leave quantiles unreported.
inline constexpr std::size_t kMinDrawsForQuantiles = 100;

struct ScalarSummary {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n - 1 denominator
  std::optional<double> lo;  // 2.5% quantile
  std::optional<double> hi;  // 97.5% quantile
  std::optional<double> rhat;  // split R-hat
  std::optional<double> ess;
};

struct DriftRow {
  std::size_t t = 0;
  std::string label;
  double mean = 0.0;
  std::optional<double> lo, hi;
};

struct NodeRow {
  NodeId node = 0;
  double theta_mean = 0.0, theta_var = 0.0;
  double gamma_mean = 0.0, gamma_var = 0.0;
  std::optional<double> relevance;
};

struct BlockAcceptance {
  std::string name;
  double proposal_sd = 0.0;
  double acceptance = 0.0;  // after proposal scales froze
  double acceptance_overall = 0.0;
};

struct Summary {
  std::size_t n_draws = 0;
  std::vector<ScalarSummary> mu, theta, gamma;
  // 1/tau_eta, 1/tau_theta, 1/tau_gamma summarized from transformed draws
  ScalarSummary var_eta, var_theta, var_gamma;
  std::vector<BlockAcceptance> acceptance;
  std::vector<DriftRow> drift;
  std::vector<NodeRow> nodes;
  std::optional<double> rho_theta_gamma;
  std::optional<double> rho_theta_relevance;
  std::optional<double> rho_gamma_relevance;
  std::vector<std::string> warnings;
};

/// Mean, variance and, with at least kMinDrawsForQuantiles draws, type-7
/// 2.5%/97.5% quantiles. R-hat and ESS need at least 4 draws.
ScalarSummary summarize_scalar(std::string name, std::span<const double> draws);

/// `relevance`, if given, must cover exactly the sample's node set;
/// otherwise DataError lists the unmatched ids.
Summary summarize(const PosteriorSample& sample, const RelevanceTable* relevance = nullptr);

/// Spearman correlation with average ranks for ties. Throws DataError when
/// either input is constant, std::invalid_argument on length < 3 or mismatch.
double rank_correlation(std::span<const double> x, std::span<const double> y);

/// Average ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);

/// Potential scale reduction over chains of equal length, each split in half.
double split_rhat(const std::vector<std::span<const double>>& chains);
double split_rhat(std::span<const double> chain);

/// Effective sample size via Geyer's initial monotone sequence.
double effective_sample_size(std::span<const double> chain);

/// Column j of a draws matrix.
std::vector<double> column(const Matrix& draws, std::size_t j);

}  // namespace dirnet
