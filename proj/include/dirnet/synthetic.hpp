#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dirnet/model.hpp"
#include "dirnet/network.hpp"

namespace dirnet {

/// Generating parameters. Unset effects are drawn i.i.d. Normal(0, 1/tau);
/// unset drift is a random walk from mu0 with increment precision tau_eta.
struct SynthSpec {
  std::size_t n_nodes = 10;
  std::size_t n_periods = 4;
  std::optional<std::vector<double>> mu;
  std::optional<std::vector<double>> theta;
  std::optional<std::vector<double>> gamma;
  double mu0 = 0.0;
  double tau_eta = 1.0;
  double tau_theta = 1.0;
  double tau_gamma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Drift `mu0 + slope * t` for t = 0..T-1.
std::vector<double> linear_drift(std::size_t n_periods, double mu0, double slope);

/// Independent Gamma(alpha_j, 1) variates normalized by their sum. Sampled
/// in log space so tiny alphas do not collapse the whole row to zero;
/// entries that still underflow are floored at 1e-300.
std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng& rng);

inline constexpr double kDirichletFloor = 1e-300;

/// Seed of the row substream (t, i) for a given run seed.
std::uint64_t row_seed(std::uint64_t seed, std::size_t t, std::size_t i);

struct SynthResult {
  DynamicNetwork network;  // stage Y, node ids 0..N-1, labels "0".."T-1"
  ModelParams truth;       // gamma satisfies the sum-to-zero constraint
};

SynthResult generate(const SynthSpec& spec);

}  // namespace dirnet
