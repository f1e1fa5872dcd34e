#pragma once

#include <random>
#include <string>
#include <vector>

#include "dirnet/network.hpp"

namespace fixture {

/// Absolute exposures that stay fixed across three periods, except for one
/// dominant edge whose growth sets each period's maximum, and a minority of
/// edges with multiplicative noise. After per-period max normalization the
/// cumulative factors to recover are `true_factors`.
struct RescaleInstance {
  dirnet::DynamicNetwork raw;
  std::vector<double> true_factors;
};

inline RescaleInstance rescale_instance(std::uint64_t seed = 2024) {
  const std::size_t n = 40;
  const std::vector<double> steps{3.0, 0.5};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::lognormal_distribution<double> noise(0.0, 0.3);

  dirnet::Matrix base(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && u(rng) < 0.5) base(i, j) = 1.0 + 9.0 * u(rng);

  std::vector<double> factor{1.0};
  for (const double s : steps) factor.push_back(factor.back() * s);

  std::vector<dirnet::Matrix> periods;
  for (std::size_t t = 0; t < factor.size(); ++t) {
    dirnet::Matrix m = base;
    // edges with i + j divisible by 7 drift randomly
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (t > 0 && m(i, j) > 0.0 && (i + j) % 7 == 0) m(i, j) *= noise(rng);
    m(0, 1) = 1000.0 * factor[t];  // the period maximum
    // the raw scale of each period is arbitrary
    const double scale = 0.37 + static_cast<double>(t);
    for (double& w : m.values()) w *= scale;
    periods.push_back(m);
  }
  std::vector<dirnet::NodeId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<dirnet::NodeId>(i + 1);
  return {dirnet::DynamicNetwork(ids, {"2008Q1", "2008Q2", "2008Q3"}, periods, dirnet::Stage::Raw), factor};
}

}  // namespace fixture
