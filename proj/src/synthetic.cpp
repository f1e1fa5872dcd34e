#include "dirnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dirnet/error.hpp"

namespace dirnet {

void SynthSpec::validate() const {
  if (n_nodes < 3) throw ConfigError("N must be >= 3");
  if (n_periods < 1) throw ConfigError("T must be >= 1");
  if (mu && mu->size() != n_periods) throw ConfigError("mu must have T entries");
  if (theta && theta->size() != n_nodes) throw ConfigError("theta must have N entries");
  if (gamma && gamma->size() != n_nodes) throw ConfigError("gamma must have N entries");
  for (const double tau : {tau_eta, tau_theta, tau_gamma}) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("precisions must be positive and finite");
  }
}

std::vector<double> linear_drift(std::size_t n_periods, double mu0, double slope) {
  std::vector<double> mu(n_periods);
  for (std::size_t t = 0; t < n_periods; ++t) mu[t] = mu0 + slope * static_cast<double>(t);
  return mu;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// log of a Gamma(a, 1) variate; for a < 1 uses G(a) = G(a + 1) U^(1/a)
double log_gamma_variate(double a, Rng& rng) {
  if (a >= 1.0) return std::log(std::gamma_distribution<double>(a, 1.0)(rng));
  const double g = std::gamma_distribution<double>(a + 1.0, 1.0)(rng);
  double u = std::generate_canonical<double, 53>(rng);
  while (u == 0.0) u = std::generate_canonical<double, 53>(rng);
  return std::log(g) + std::log(u) / a;
}

}  // namespace

std::uint64_t row_seed(std::uint64_t seed, std::size_t t, std::size_t i) {
  return splitmix64(splitmix64(splitmix64(seed) ^ t) ^ i);
}

std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng& rng) {
  if (alpha.empty()) throw std::invalid_argument("empty alpha");
  std::vector<double> logs(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j])) throw std::invalid_argument("alpha must be positive and finite");
    logs[j] = log_gamma_variate(alpha[j], rng);
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> out(alpha.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(std::exp(logs[j] - top), kDirichletFloor);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= total;
  return out;
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_nodes;
  const std::size_t periods = spec.n_periods;

  // parameter stream is separate from the per-row substreams
  Rng rng(splitmix64(spec.seed ^ 0x5eedULL));
  std::normal_distribution<double> normal(0.0, 1.0);

  ModelParams truth = ModelParams::zeros(periods, n);
  if (spec.mu) {
    truth.mu = *spec.mu;
  } else {
    double level = spec.mu0;
    for (std::size_t t = 0; t < periods; ++t) {
      if (t > 0) level += normal(rng) / std::sqrt(spec.tau_eta);
      truth.mu[t] = level;
    }
  }
  if (spec.theta) {
    truth.theta = *spec.theta;
  } else {
    for (double& v : truth.theta) v = normal(rng) / std::sqrt(spec.tau_theta);
  }
  if (spec.gamma) {
    truth.gamma = *spec.gamma;
  } else {
    for (double& v : truth.gamma) v = normal(rng) / std::sqrt(spec.tau_gamma);
  }
  const double centre = std::accumulate(truth.gamma.begin(), truth.gamma.end(), 0.0) / static_cast<double>(n);
  for (double& v : truth.gamma) v -= centre;
  truth.enforce_gamma_constraint();
  truth.tau_eta = spec.tau_eta;
  truth.tau_theta = spec.tau_theta;
  truth.tau_gamma = spec.tau_gamma;

  std::vector<Matrix> mats(periods, Matrix(n, n));
  std::vector<double> row_alpha(n - 1);
  for (std::size_t t = 0; t < periods; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      Rng row_rng(row_seed(spec.seed, t, i));
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        if (j != i) row_alpha[k++] = alpha(truth, t, i, j);
      }
      const std::vector<double> y = dirichlet_draw(row_alpha, row_rng);
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        if (j != i) mats[t](i, j) = y[k++];
      }
    }
  }

  std::vector<NodeId> ids(n);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  std::vector<std::string> labels(periods);
  for (std::size_t t = 0; t < periods; ++t) labels[t] = std::to_string(t);
  return {DynamicNetwork(std::move(ids), std::move(labels), std::move(mats), Stage::Relative), std::move(truth)};
}

}  // namespace dirnet
