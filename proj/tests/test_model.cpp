#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dirnet/error.hpp"
#include "dirnet/model.hpp"
#include "oracles.hpp"

using namespace dirnet;

namespace {

struct Instance {
  std::vector<Matrix> y;
  std::vector<std::vector<bool>> active;
  DynamicNetwork net;
  RowMask mask;
};

Instance make_instance(std::mt19937_64& rng, std::size_t periods, std::size_t n, double mask_prob = 0.0) {
  auto y = oracle::random_simplex_rows(periods, n, rng);
  std::bernoulli_distribution drop(mask_prob);
  std::vector<std::vector<bool>> active(periods, std::vector<bool>(n, true));
  for (std::size_t t = 0; t < periods; ++t)
    for (std::size_t i = 0; i < n; ++i)
      if (drop(rng)) {
        active[t][i] = false;
        for (std::size_t j = 0; j < n; ++j) y[t](i, j) = 0.0;
      }
  std::vector<NodeId> ids(n);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  std::vector<std::string> labels(periods, "p");
  for (std::size_t t = 0; t < periods; ++t) labels[t] = std::to_string(t);
  DynamicNetwork net(ids, labels, y, Stage::Relative);
  RowMask mask = RowMask::from_network(net);
  return {y, active, std::move(net), std::move(mask)};
}

ModelParams random_params(std::mt19937_64& rng, std::size_t periods, std::size_t n) {
  std::normal_distribution<double> z(0.0, 0.7);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  ModelParams p = ModelParams::zeros(periods, n);
  for (double& v : p.mu) v = z(rng);
  for (double& v : p.theta) v = z(rng);
  for (double& v : p.gamma) v = z(rng);
  p.enforce_gamma_constraint();
  p.tau_eta = u(rng);
  p.tau_theta = u(rng);
  p.tau_gamma = u(rng);
  return p;
}

Hyperparams random_hyper(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 2.0);
  Hyperparams h;
  h.tau_mu = u(rng);
  h.a_eta = u(rng), h.b_eta = u(rng);
  h.a_theta = u(rng), h.b_theta = u(rng);
  h.a_gamma = u(rng), h.b_gamma = u(rng);
  return h;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("alpha examples") {
    ModelParams p = ModelParams::zeros(1, 3);
    CHECK(alpha(p, 0, 0, 1) == 1.0);
    p.mu[0] = 1.0;
    p.theta[0] = -1.0;
    CHECK(alpha(p, 0, 0, 1) == 1.0);
    p.mu[0] = 0.5;
    p.theta[0] = 0.2;
    p.gamma[1] = -0.1;
    CHECK(alpha(p, 0, 0, 1) == doctest::Approx(1.8221188).epsilon(1e-7));
    CHECK_THROWS_AS(alpha(p, 0, 1, 1), std::invalid_argument);
  }

  TEST_CASE("alpha is strictly increasing in each coordinate") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 100; ++rep) {
      ModelParams p = random_params(rng, 2, 4);
      const double base = alpha(p, 1, 2, 3);
      ModelParams q = p;
      q.mu[1] += 0.01;
      CHECK(alpha(q, 1, 2, 3) > base);
      q = p;
      q.theta[2] += 0.01;
      CHECK(alpha(q, 1, 2, 3) > base);
      q = p;
      q.gamma[3] += 0.01;
      CHECK(alpha(q, 1, 2, 3) > base);
    }
  }

  TEST_CASE("dirichlet closed forms") {
    const std::vector<double> ones{1, 1, 1};
    for (const auto& y : {std::vector<double>{0.2, 0.3, 0.5}, std::vector<double>{0.01, 0.01, 0.98}}) {
      CHECK(std::abs(log_dirichlet_row(y, ones) - std::log(2.0)) < 1e-12);
    }
    const double v = log_dirichlet_row(std::vector<double>{0.5, 0.5}, std::vector<double>{2, 2});
    CHECK(std::abs(v - std::log(1.5)) < 1e-12);
    CHECK(v == doctest::Approx(0.405465).epsilon(1e-6));
    CHECK_THROWS_AS(log_dirichlet_row(std::vector<double>{0.0, 1.0}, std::vector<double>{1, 1}), DataError);
    CHECK_THROWS_AS(log_dirichlet_row(std::vector<double>{0.5, 0.6}, std::vector<double>{1, 1}), DataError);
  }

  TEST_CASE("dirichlet integrates to one on the 1-simplex") {
    for (const double a : {0.5, 1.0, 3.0}) {
      // y = sin^2(u) removes the endpoint singularities of a < 1
      const auto f = [&](double u) {
        const double s = std::sin(u), c = std::cos(u);
        if (s == 0.0 || c == 0.0) return 0.0;
        return std::exp(log_dirichlet_row(std::vector<double>{s * s, c * c}, std::vector<double>{a, a})) * 2.0 * s * c;
      };
      // open midpoint rule: the endpoints are never evaluated
      const std::size_t panels = 20000;
      const double h = M_PI / 2 / static_cast<double>(panels);
      double mass = 0.0;
      for (std::size_t k = 0; k < panels; ++k) mass += h * f(h * (static_cast<double>(k) + 0.5));
      CHECK(std::abs(mass - 1.0) < 1e-6);
    }
  }

  TEST_CASE("likelihood: singleton, all masked, brute force") {
    std::mt19937_64 rng(2);
    auto inst = make_instance(rng, 1, 3);
    RowMask one(1, 3, false);
    one.set(0, 1, true);
    const ModelData d1(inst.net, one);
    ModelParams p = random_params(rng, 1, 3);
    std::vector<double> y{inst.y[0](1, 0), inst.y[0](1, 2)};
    std::vector<double> a{alpha(p, 0, 1, 0), alpha(p, 0, 1, 2)};
    CHECK(log_likelihood(p, d1) == doctest::Approx(log_dirichlet_row(y, a)).epsilon(1e-13));

    const ModelData none(inst.net, RowMask(1, 3, false));
    CHECK(log_likelihood(p, none) == 0.0);

    for (int rep = 0; rep < 50; ++rep) {
      auto in = make_instance(rng, 2, 4, 0.2);
      const ModelData d(in.net, in.mask);
      const ModelParams q = random_params(rng, 2, 4);
      Hyperparams h;
      const double brute = oracle::log_posterior(q, in.y, in.active, h) - log_prior(q, h);
      CHECK(log_likelihood(q, d) == doctest::Approx(brute).epsilon(1e-11));
    }
  }

  TEST_CASE("prior examples") {
    Hyperparams h;
    ModelParams p = ModelParams::zeros(3, 4);
    // zero quadratic forms and unit precisions: only Gamma prior terms, all log 1 = 0 or -b
    CHECK(log_prior(p, h) == doctest::Approx(-(h.b_eta + h.b_theta + h.b_gamma)).epsilon(1e-15));

    std::mt19937_64 rng(3);
    p = random_params(rng, 3, 4);
    ModelParams q = p;
    const double c = 0.37;
    for (double& v : q.mu) v += c;
    const double want = -h.tau_mu * ((p.mu[0] + c) * (p.mu[0] + c) - p.mu[0] * p.mu[0]) / 2.0;
    CHECK(log_prior(q, h) - log_prior(p, h) == doctest::Approx(want).epsilon(1e-10));
  }

  TEST_CASE("full conditionals: indicator logic for mu") {
    std::mt19937_64 rng(4);
    auto inst = make_instance(rng, 1, 3);
    const ModelData d(inst.net, RowMask(1, 3, false));
    Hyperparams h;
    h.tau_mu = 2.0;
    ModelParams p = random_params(rng, 1, 3);
    CHECK(logfc_mu(p, d, h, 0, 0.8) == doctest::Approx(-0.5 * 2.0 * 0.64).epsilon(1e-14));

    auto inst3 = make_instance(rng, 3, 3);
    const ModelData d3(inst3.net, RowMask(3, 3, false));
    ModelParams p3 = random_params(rng, 3, 3);
    p3.tau_eta = 1.5;
    const double x = 0.3;
    const double e0 = -0.5 * h.tau_mu * x * x - 0.5 * 1.5 * (p3.mu[1] - x) * (p3.mu[1] - x);
    CHECK(logfc_mu(p3, d3, h, 0, x) == doctest::Approx(e0).epsilon(1e-14));
    const double e1 = -0.5 * 1.5 * ((x - p3.mu[0]) * (x - p3.mu[0]) + (p3.mu[2] - x) * (p3.mu[2] - x));
    CHECK(logfc_mu(p3, d3, h, 1, x) == doctest::Approx(e1).epsilon(1e-14));
    const double e2 = -0.5 * 1.5 * (x - p3.mu[1]) * (x - p3.mu[1]);
    CHECK(logfc_mu(p3, d3, h, 2, x) == doctest::Approx(e2).epsilon(1e-14));
  }

  TEST_CASE("full conditionals: masked theta row reduces to the prior") {
    std::mt19937_64 rng(5);
    auto inst = make_instance(rng, 2, 4);
    RowMask mask(2, 4, true);
    mask.set(0, 2, false);
    mask.set(1, 2, false);
    const ModelData d(inst.net, mask);
    ModelParams p = random_params(rng, 2, 4);
    CHECK(logfc_theta(p, d, Hyperparams{}, 2, 0.6) == doctest::Approx(-0.5 * p.tau_theta * 0.36).epsilon(1e-14));
  }

  TEST_CASE("N = 2 is rejected") {
    Matrix m(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    const DynamicNetwork net({1, 2}, {"0"}, {m}, Stage::Relative);
    try {
      ModelData d(net);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("N must exceed 2") != std::string::npos);
    }
  }

  TEST_CASE("gamma full conditional at the current value differs by zero") {
    std::mt19937_64 rng(6);
    auto inst = make_instance(rng, 2, 5);
    const ModelData d(inst.net, inst.mask);
    const ModelParams p = random_params(rng, 2, 5);
    for (std::size_t l = 1; l < 5; ++l) {
      CHECK(logfc_gamma(p, d, Hyperparams{}, l, p.gamma[l]) - logfc_gamma(p, d, Hyperparams{}, l, p.gamma[l]) == 0.0);
    }
    CHECK_THROWS_AS(logfc_gamma(p, d, Hyperparams{}, 0, 0.1), std::out_of_range);
  }

  TEST_CASE("full conditionals agree with the brute-force joint") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> step(0.0, 0.5);
    for (int rep = 0; rep < 60; ++rep) {
      const std::size_t n = 3 + static_cast<std::size_t>(rep % 4);
      const std::size_t periods = 1 + static_cast<std::size_t>(rep % 3);
      auto inst = make_instance(rng, periods, n, 0.15);
      const ModelData d(inst.net, inst.mask);
      const Hyperparams h = random_hyper(rng);
      const ModelParams p = random_params(rng, periods, n);
      const double joint = oracle::log_posterior(p, inst.y, inst.active, h);
      for (std::size_t s = 0; s < periods; ++s) {
        ModelParams q = p;
        q.mu[s] += step(rng);
        const double dfc = logfc_mu(p, d, h, s, q.mu[s]) - logfc_mu(p, d, h, s, p.mu[s]);
        CHECK(std::abs(dfc - (oracle::log_posterior(q, inst.y, inst.active, h) - joint)) < 1e-8);
      }
      for (std::size_t k = 0; k < n; ++k) {
        ModelParams q = p;
        q.theta[k] += step(rng);
        const double dfc = logfc_theta(p, d, h, k, q.theta[k]) - logfc_theta(p, d, h, k, p.theta[k]);
        CHECK(std::abs(dfc - (oracle::log_posterior(q, inst.y, inst.active, h) - joint)) < 1e-8);
      }
      for (std::size_t l = 1; l < n; ++l) {
        ModelParams q = p;
        q.set_free_gamma(l, p.gamma[l] + step(rng));
        const double dfc = logfc_gamma(p, d, h, l, q.gamma[l]) - logfc_gamma(p, d, h, l, p.gamma[l]);
        CHECK(std::abs(dfc - (oracle::log_posterior(q, inst.y, inst.active, h) - joint)) < 1e-8);
      }
    }
  }

  TEST_CASE("likelihood is invariant under joint node permutation") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
      auto inst = make_instance(rng, 2, 5);
      const ModelParams p = random_params(rng, 2, 5);
      std::vector<std::size_t> perm(5);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<Matrix> py(2, Matrix(5, 5));
      ModelParams q = p;
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < 5; ++i)
          for (std::size_t j = 0; j < 5; ++j) py[t](perm[i], perm[j]) = inst.y[t](i, j);
      for (std::size_t i = 0; i < 5; ++i) q.theta[perm[i]] = p.theta[i], q.gamma[perm[i]] = p.gamma[i];
      const DynamicNetwork pn(inst.net.node_ids(), inst.net.period_labels(), py, Stage::Relative);
      const double a = log_likelihood(p, ModelData(inst.net));
      const double b = log_likelihood(q, ModelData(pn));
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }

  TEST_CASE("theta/gamma shear leaves the likelihood unchanged") {
    std::mt19937_64 rng(9);
    auto inst = make_instance(rng, 2, 4);
    const ModelData d(inst.net);
    const ModelParams p = random_params(rng, 2, 4);
    ModelParams q = p;
    for (double& v : q.theta) v += 0.8;
    for (double& v : q.gamma) v -= 0.8;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        if (i != j) CHECK(alpha(q, 1, i, j) == doctest::Approx(alpha(p, 1, i, j)).epsilon(1e-14));
    CHECK(log_likelihood(q, d) == doctest::Approx(log_likelihood(p, d)).epsilon(1e-12));
  }

  TEST_CASE("likelihood is bit-identical across thread counts") {
    std::mt19937_64 rng(10);
    auto inst = make_instance(rng, 3, 12, 0.1);
    const ModelData d(inst.net, inst.mask);
    const ModelParams p = random_params(rng, 3, 12);
    const double one = log_likelihood(p, d, {1});
    for (const int threads : {2, 3, 8}) {
      CHECK(log_likelihood(p, d, {threads}) == one);
      CHECK(logfc_gamma(p, d, Hyperparams{}, 3, 0.2, {threads}) == logfc_gamma(p, d, Hyperparams{}, 3, 0.2, {1}));
      CHECK(logfc_mu(p, d, Hyperparams{}, 1, 0.2, {threads}) == logfc_mu(p, d, Hyperparams{}, 1, 0.2, {1}));
    }
  }

  TEST_CASE("unfloored zeros make the posterior non-finite") {
    Matrix m(3, 3);
    m(0, 1) = 1.0;  // y_02 = 0
    m(1, 0) = 0.5, m(1, 2) = 0.5;
    m(2, 0) = 0.5, m(2, 1) = 0.5;
    const ModelData d(DynamicNetwork({1, 2, 3}, {"0"}, {m}, Stage::Relative));
    CHECK_THROWS_AS(log_posterior(ModelParams::zeros(1, 3), d, Hyperparams{}), NumericalError);
  }

  TEST_CASE("conjugate shape and rate") {
    Hyperparams h;
    ModelParams p = ModelParams::zeros(16, 3);
    for (double& v : p.mu) v = 0.4;
    const auto eta = tau_eta_posterior(p, h);
    CHECK(eta.shape == doctest::Approx(7.51).epsilon(1e-14));
    CHECK(eta.rate == doctest::Approx(0.01).epsilon(1e-14));

    ModelParams q = ModelParams::zeros(1, 100);
    q.theta[0] = 1.0;
    q.theta[1] = -1.0;
    const auto th = tau_theta_posterior(q, h);
    CHECK(th.shape == doctest::Approx(50.01).epsilon(1e-14));
    CHECK(th.rate == doctest::Approx(1.01).epsilon(1e-14));

    q.gamma[0] = 5.0;  // not free: excluded
    q.gamma[1] = 2.0;
    const auto ga = tau_gamma_posterior(q, h);
    CHECK(ga.shape == doctest::Approx(0.01 + 99.0 / 2).epsilon(1e-14));
    CHECK(ga.rate == doctest::Approx(0.01 + 2.0).epsilon(1e-14));
  }

  TEST_CASE("gamma draws match closed-form moments") {
    Rng rng(11);
    const GammaPosterior g{3.5, 2.0};
    const int n = 100000;
    double s = 0.0, ss = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = draw_gamma(g, rng);
      s += x;
      ss += x * x;
    }
    const double mean = s / n, var = ss / n - mean * mean;
    const double want_mean = 3.5 / 2.0, want_var = 3.5 / 4.0;
    CHECK(std::abs(mean - want_mean) < 3.0 * std::sqrt(want_var / n));
    // variance of the sample variance for Gamma: (mu4 - sigma^4)/n, mu4 = 3 k (k + 2) / rate^4
    const double mu4 = 3.0 * 3.5 * (3.5 + 2.0) / 16.0;
    CHECK(std::abs(var - want_var) < 3.0 * std::sqrt((mu4 - want_var * want_var) / n));
  }

  TEST_CASE("gamma constraint helpers") {
    ModelParams p = ModelParams::zeros(1, 4);
    p.set_free_gamma(2, 0.3);
    p.set_free_gamma(3, -1.1);
    CHECK(p.gamma_constraint_residual() == 0.0);
    CHECK(p.gamma[0] == -(0.3 + -1.1));
    CHECK_THROWS_AS(p.set_free_gamma(0, 1.0), std::out_of_range);
    Hyperparams bad;
    bad.a_eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}
