#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "dirnet/kernels.hpp"

using namespace dirnet;
namespace k = dirnet::kernels;

namespace {

bool have_avx2() {
  if (k::isa_available(k::Isa::Avx2)) return true;
  MESSAGE("AVX2 not available on this CPU; SIMD checks skipped");
  return false;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

// Reference sums in long double.
k::RowTerms brute(double offset, const std::vector<double>& w, const std::vector<double>& ly,
                  const std::vector<std::uint8_t>& inc) {
  long double sa = 0, sl = 0, sy = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (!inc.empty() && !inc[j]) continue;
    const long double a = std::exp(static_cast<long double>(offset) + w[j]);
    sa += a;
    sl += std::lgamma(a);
    sy += a * ly[j];
  }
  return {static_cast<double>(sa), static_cast<double>(sl), static_cast<double>(sy)};
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("isa names and selection") {
    CHECK(k::parse_isa("scalar") == k::Isa::Scalar);
    CHECK(k::parse_isa("auto") == k::best_isa());
    CHECK_THROWS_AS(k::parse_isa("neon"), std::invalid_argument);
    CHECK(k::isa_available(k::Isa::Scalar));
    const k::Isa before = k::active_isa();
    k::set_isa(k::Isa::Scalar);
    CHECK(k::active_isa() == k::Isa::Scalar);
    k::set_isa(before);
  }

  TEST_CASE("scalar row terms match a long-double recount") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 2.0);
    std::uniform_real_distribution<double> u(-30.0, 0.0);
    for (std::size_t len = 0; len < 40; ++len) {
      std::vector<double> w(len), ly(len);
      std::vector<std::uint8_t> inc(len);
      for (std::size_t j = 0; j < len; ++j) w[j] = n(rng), ly[j] = u(rng), inc[j] = (j % 3 != 1);
      const double off = n(rng);
      for (const bool masked : {false, true}) {
        const auto got = k::scalar::row_terms(off, w, ly, masked ? std::span<const std::uint8_t>(inc) : std::span<const std::uint8_t>{});
        const auto want = brute(off, w, ly, masked ? inc : std::vector<std::uint8_t>{});
        CHECK(got.sum_alpha == doctest::Approx(want.sum_alpha).epsilon(1e-13));
        CHECK(std::abs(got.sum_lgamma - want.sum_lgamma) <= 1e-12 * std::max(1.0, std::abs(want.sum_lgamma)) * static_cast<double>(len + 1));
        CHECK(std::abs(got.sum_alpha_logy - want.sum_alpha_logy) <= 1e-12 * std::max(1.0, std::abs(want.sum_alpha_logy)));
      }
    }
  }

  TEST_CASE("avx2 exp accuracy") {
    if (!have_avx2()) return;
    std::vector<double> in;
    for (double x = -745.0; x <= 709.7; x += 0.0137) in.push_back(x);
    for (const double x : {0.0, -0.0, 1e-300, -1e-300, 709.78, 1000.0, -1000.0}) in.push_back(x);
    std::vector<double> out(in.size());
    k::avx2::exp(in, out);
    double worst = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      const double want = std::exp(in[j]);
      if (want > 2.3e-308 && std::isfinite(want)) worst = std::max(worst, rel_err(out[j], want));
    }
    CHECK(worst < 5e-16);
    CHECK(out[in.size() - 2] == HUGE_VAL);
    CHECK(out[in.size() - 1] == 0.0);
  }

  TEST_CASE("avx2 log accuracy") {
    if (!have_avx2()) return;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> e(-700.0, 700.0);
    std::vector<double> in;
    for (int j = 0; j < 20000; ++j) in.push_back(std::exp(e(rng)));
    for (const double x : {1.0, 2.0, 0.5, 1.0 + 1e-12, 1.0 - 1e-12, 0.75, 1.5, 1e-300}) in.push_back(x);
    std::vector<double> out(in.size());
    k::avx2::log(in, out);
    for (std::size_t j = 0; j < in.size(); ++j) {
      const double want = std::log(in[j]);
      CHECK(std::abs(out[j] - want) <= 4e-16 * std::max(1.0, std::abs(want)));
    }
  }

  TEST_CASE("avx2 lgamma accuracy") {
    if (!have_avx2()) return;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> e(-18.0, 14.0);
    std::vector<double> in;
    for (int j = 0; j < 20000; ++j) in.push_back(std::exp(e(rng)));
    for (const double x : {1.0, 2.0, 0.5, 3.0, 7.999, 8.0, 8.001, 1e-300, 1e-8}) in.push_back(x);
    std::vector<double> out(in.size());
    k::avx2::lgamma(in, out);
    double worst = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      const double want = std::lgamma(in[j]);
      worst = std::max(worst, std::abs(out[j] - want) / std::max(1.0, std::abs(want)));
    }
    CHECK(worst < 1e-13);
  }

  TEST_CASE("avx2 row terms are equivalent to the scalar reference") {
    if (!have_avx2()) return;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 2.5);
    std::uniform_real_distribution<double> u(-40.0, 0.0);
    std::bernoulli_distribution keep(0.7);
    for (int rep = 0; rep < 400; ++rep) {
      const std::size_t len = static_cast<std::size_t>(rep % 67);
      std::vector<double> w(len), ly(len);
      std::vector<std::uint8_t> inc(len);
      for (std::size_t j = 0; j < len; ++j) w[j] = n(rng), ly[j] = u(rng), inc[j] = keep(rng);
      const double off = n(rng);
      for (const bool masked : {false, true}) {
        const std::span<const std::uint8_t> m = masked ? std::span<const std::uint8_t>(inc) : std::span<const std::uint8_t>{};
        const auto s = k::scalar::row_terms(off, w, ly, m);
        const auto v = k::avx2::row_terms(off, w, ly, m);
        const double scale = static_cast<double>(len + 1);
        CHECK(std::abs(v.sum_alpha - s.sum_alpha) <= 1e-14 * scale * std::max(1.0, std::abs(s.sum_alpha)));
        CHECK(std::abs(v.sum_lgamma - s.sum_lgamma) <= 1e-13 * scale * std::max(1.0, std::abs(s.sum_lgamma)));
        CHECK(std::abs(v.sum_alpha_logy - s.sum_alpha_logy) <=
              1e-14 * scale * std::max(1.0, std::abs(s.sum_alpha_logy)));
      }
    }
  }

  TEST_CASE("dispatch follows the active isa") {
    std::vector<double> w{0.1, -0.3, 0.7, 1.2, -2.0};
    std::vector<double> ly{-1.0, -2.0, -0.5, -3.0, -1.5};
    const k::Isa before = k::active_isa();
    k::set_isa(k::Isa::Scalar);
    const auto a = k::row_terms(0.2, w, ly);
    const auto ref = k::scalar::row_terms(0.2, w, ly, {});
    CHECK(a.sum_alpha == ref.sum_alpha);
    CHECK(a.sum_lgamma == ref.sum_lgamma);
    k::set_isa(before);
  }
}
