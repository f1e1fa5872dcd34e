#include "dirnet/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dirnet/error.hpp"
#include "dirnet/kernels.hpp"
#include "dirnet/parallel.hpp"

namespace dirnet {

ModelParams ModelParams::zeros(std::size_t n_periods, std::size_t n_nodes) {
  ModelParams p;
  p.mu.assign(n_periods, 0.0);
  p.theta.assign(n_nodes, 0.0);
  p.gamma.assign(n_nodes, 0.0);
  return p;
}

double ModelParams::free_gamma_sum() const {
  double s = 0.0;
  for (std::size_t j = 1; j < gamma.size(); ++j) s += gamma[j];
  return s;
}

void ModelParams::enforce_gamma_constraint() {
  if (!gamma.empty()) gamma[0] = -free_gamma_sum();
}

void ModelParams::set_free_gamma(std::size_t l, double value) {
  if (l == 0 || l >= gamma.size()) throw std::out_of_range("gamma index must be in [1, N)");
  gamma[l] = value;
  enforce_gamma_constraint();
}

double ModelParams::gamma_constraint_residual() const {
  return gamma.empty() ? 0.0 : gamma[0] + free_gamma_sum();
}

void Hyperparams::validate() const {
  const double all[] = {tau_mu, a_eta, b_eta, a_theta, b_theta, a_gamma, b_gamma};
  for (const double v : all) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("hyperparameters must be finite and > 0");
  }
}

ModelData::ModelData(const DynamicNetwork& relative) : ModelData(relative, RowMask::from_network(relative)) {}

ModelData::ModelData(const DynamicNetwork& relative, RowMask mask)
    : n_nodes_(relative.n_nodes()),
      n_periods_(relative.n_periods()),
      node_ids_(relative.node_ids()),
      period_labels_(relative.period_labels()),
      mask_(std::move(mask)) {
  if (relative.stage() != Stage::Relative) throw DataError("model data must be a relative (Y) network");
  if (n_nodes_ < 3) throw DataError("N must exceed 2 (each row needs at least two counterparties)");
  if (n_periods_ < 1) throw DataError("network has no periods");
  if (mask_.n_periods() != n_periods_ || mask_.n_nodes() != n_nodes_) {
    throw DataError("row mask shape does not match network");
  }
  log_y_.reserve(n_periods_);
  row_log_sum_ = Matrix(n_periods_, n_nodes_);
  for (std::size_t t = 0; t < n_periods_; ++t) {
    const Matrix& y = relative.period(t);
    Matrix ly(n_nodes_, n_nodes_);
    for (std::size_t i = 0; i < n_nodes_; ++i) {
      if (!mask_.active(t, i)) continue;
      double sum = 0.0;
      double log_sum = 0.0;
      for (std::size_t j = 0; j < n_nodes_; ++j) {
        if (j == i) continue;
        sum += y(i, j);
        ly(i, j) = std::log(y(i, j));
        log_sum += ly(i, j);
      }
      if (std::abs(sum - 1.0) > 1e-10) {
        throw DataError("row " + std::to_string(relative.node_ids()[i]) + " of period " +
                        relative.period_labels()[t] + " sums to " + format_double(sum));
      }
      row_log_sum_(t, i) = log_sum;
    }
    log_y_.push_back(std::move(ly));
  }
}

double alpha(const ModelParams& params, std::size_t t, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("alpha is undefined for self-pairs");
  return std::exp(params.mu.at(t) + params.theta.at(i) + params.gamma.at(j));
}

double log_dirichlet_row(std::span<const double> y, std::span<const double> alpha) {
  if (y.size() != alpha.size() || y.empty()) throw DataError("y and alpha must have equal nonzero length");
  double y_sum = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!(y[k] > 0.0)) throw DataError("Dirichlet row entries must be strictly positive");
    if (!(alpha[k] > 0.0)) throw DataError("Dirichlet parameters must be strictly positive");
    y_sum += y[k];
  }
  if (std::abs(y_sum - 1.0) > 1e-10) throw DataError("Dirichlet row does not sum to 1");

  double alpha_sum = 0.0;
  double value = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    alpha_sum += alpha[k];
    value += (alpha[k] - 1.0) * std::log(y[k]) - kernels::log_gamma(alpha[k]);
  }
  value += kernels::log_gamma(alpha_sum);
  if (!std::isfinite(value)) throw NumericalError("Dirichlet log-density is not finite");
  return value;
}

namespace {

// Row terms of row i with offset mu_t + theta_i, skipping the self entry.
kernels::RowTerms row_terms_off_diagonal(double offset, std::span<const double> gamma,
                                         std::span<const double> log_y, std::size_t i) {
  kernels::RowTerms terms = kernels::row_terms(offset, gamma.first(i), log_y.first(i));
  terms += kernels::row_terms(offset, gamma.subspan(i + 1), log_y.subspan(i + 1));
  return terms;
}

// Parameter-dependent part of a row's Dirichlet log-density; the constant
// -sum log y is left to the caller.
double row_density(double offset, const ModelParams& params, const ModelData& data, std::size_t t,
                   std::size_t i) {
  const auto terms = row_terms_off_diagonal(offset, params.gamma, data.log_y_row(t, i), i);
  return kernels::log_gamma(terms.sum_alpha) - terms.sum_lgamma + terms.sum_alpha_logy;
}

double sum_squares(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return s;
}

double random_walk_sum_squares(std::span<const double> mu) {
  double s = 0.0;
  for (std::size_t t = 1; t < mu.size(); ++t) s += (mu[t] - mu[t - 1]) * (mu[t] - mu[t - 1]);
  return s;
}

void check_dims(const ModelParams& params, const ModelData& data) {
  if (params.mu.size() != data.n_periods() || params.theta.size() != data.n_nodes() ||
      params.gamma.size() != data.n_nodes()) {
    throw DataError("parameter dimensions do not match the network");
  }
}

}  // namespace

double log_likelihood(const ModelParams& params, const ModelData& data, const EvalOptions& opt) {
  check_dims(params, data);
  const std::size_t n = data.n_nodes();
  const double value = ordered_sum(data.n_periods() * n, opt.threads, [&](std::size_t k) {
    const std::size_t t = k / n;
    const std::size_t i = k % n;
    if (!data.active(t, i)) return 0.0;
    return row_density(params.mu[t] + params.theta[i], params, data, t, i) - data.row_log_sum(t, i);
  });
  if (!std::isfinite(value)) throw NumericalError("log-likelihood is not finite");
  return value;
}

double log_prior(const ModelParams& params, const Hyperparams& hyper) {
  const double n_periods = static_cast<double>(params.mu.size());
  const double n_nodes = static_cast<double>(params.theta.size());
  double lp = 0.0;
  if (!params.mu.empty()) lp -= 0.5 * hyper.tau_mu * params.mu[0] * params.mu[0];
  lp += 0.5 * (n_periods - 1.0) * std::log(params.tau_eta) -
        0.5 * params.tau_eta * random_walk_sum_squares(params.mu);
  lp += 0.5 * n_nodes * std::log(params.tau_theta) - 0.5 * params.tau_theta * sum_squares(params.theta);
  const std::span<const double> free_gamma =
      params.gamma.empty() ? std::span<const double>{} : std::span<const double>(params.gamma).subspan(1);
  lp += 0.5 * (n_nodes - 1.0) * std::log(params.tau_gamma) -
        0.5 * params.tau_gamma * sum_squares(free_gamma);
  lp += (hyper.a_eta - 1.0) * std::log(params.tau_eta) - hyper.b_eta * params.tau_eta;
  lp += (hyper.a_theta - 1.0) * std::log(params.tau_theta) - hyper.b_theta * params.tau_theta;
  lp += (hyper.a_gamma - 1.0) * std::log(params.tau_gamma) - hyper.b_gamma * params.tau_gamma;
  return lp;
}

double log_posterior(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                     const EvalOptions& opt) {
  const double value = log_likelihood(params, data, opt) + log_prior(params, hyper);
  if (!std::isfinite(value)) throw NumericalError("log-posterior is not finite");
  return value;
}

double logfc_mu(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                std::size_t s, double value, const EvalOptions& opt) {
  check_dims(params, data);
  const std::size_t n_periods = data.n_periods();
  if (s >= n_periods) throw std::out_of_range("period index out of range");

  double lp = ordered_sum(data.n_nodes(), opt.threads, [&](std::size_t i) {
    if (!data.active(s, i)) return 0.0;
    return row_density(value + params.theta[i], params, data, s, i);
  });
  if (s == 0) lp -= 0.5 * hyper.tau_mu * value * value;
  if (s > 0) {
    const double d = value - params.mu[s - 1];
    lp -= 0.5 * params.tau_eta * d * d;
  }
  if (s + 1 < n_periods) {
    const double d = params.mu[s + 1] - value;
    lp -= 0.5 * params.tau_eta * d * d;
  }
  return lp;
}

double logfc_theta(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                   std::size_t k, double value, const EvalOptions& opt) {
  (void)hyper;
  check_dims(params, data);
  if (k >= data.n_nodes()) throw std::out_of_range("node index out of range");
  double lp = ordered_sum(data.n_periods(), opt.threads, [&](std::size_t t) {
    if (!data.active(t, k)) return 0.0;
    return row_density(params.mu[t] + value, params, data, t, k);
  });
  lp -= 0.5 * params.tau_theta * value * value;
  return lp;
}

double logfc_gamma(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                   std::size_t l, double value, const EvalOptions& opt) {
  (void)hyper;
  check_dims(params, data);
  const std::size_t n = data.n_nodes();
  if (l == 0 || l >= n) throw std::out_of_range("gamma index must be in [1, N)");

  std::vector<double> gamma = params.gamma;
  gamma[l] = value;
  gamma[0] = 0.0;
  double free_sum = 0.0;
  for (std::size_t j = 1; j < n; ++j) free_sum += gamma[j];
  gamma[0] = -free_sum;

  // Row normalizers sum_{j != i} alpha_ij = exp(mu_t + theta_i + log(S - e^{gamma_i})).
  std::vector<double> exp_gamma(n);
  for (std::size_t j = 0; j < n; ++j) exp_gamma[j] = std::exp(gamma[j]);
  const double total = pairwise_sum(exp_gamma);
  std::vector<double> normalizer_weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    normalizer_weight[i] = params.theta[i] + std::log(total - exp_gamma[i]);
  }
  const std::vector<double> zeros(n, 0.0);

  // Columns l and 0 read y_il down the rows, so gather them per period.
  double lp = ordered_sum(data.n_periods(), opt.threads, [&](std::size_t t) {
    const auto active = data.mask().period(t);
    double v = kernels::row_terms(params.mu[t], normalizer_weight, zeros, active).sum_lgamma;
    std::vector<double> column(n);
    std::vector<std::uint8_t> include(active.begin(), active.end());
    for (const std::size_t col : {l, std::size_t{0}}) {
      for (std::size_t i = 0; i < n; ++i) column[i] = data.log_y(t, i, col);
      const std::uint8_t saved = include[col];
      include[col] = 0;
      const auto terms = kernels::row_terms(params.mu[t] + gamma[col], params.theta, column, include);
      include[col] = saved;
      v += terms.sum_alpha_logy - terms.sum_lgamma;
    }
    return v;
  });
  lp -= 0.5 * params.tau_gamma * value * value;
  return lp;
}

GammaPosterior tau_eta_posterior(const ModelParams& params, const Hyperparams& hyper) {
  const double n_periods = static_cast<double>(params.mu.size());
  return {hyper.a_eta + 0.5 * (n_periods - 1.0), hyper.b_eta + 0.5 * random_walk_sum_squares(params.mu)};
}

GammaPosterior tau_theta_posterior(const ModelParams& params, const Hyperparams& hyper) {
  const double n_nodes = static_cast<double>(params.theta.size());
  return {hyper.a_theta + 0.5 * n_nodes, hyper.b_theta + 0.5 * sum_squares(params.theta)};
}

GammaPosterior tau_gamma_posterior(const ModelParams& params, const Hyperparams& hyper) {
  const double n_nodes = static_cast<double>(params.gamma.size());
  double ss = 0.0;
  for (std::size_t j = 1; j < params.gamma.size(); ++j) ss += params.gamma[j] * params.gamma[j];
  return {hyper.a_gamma + 0.5 * (n_nodes - 1.0), hyper.b_gamma + 0.5 * ss};
}

double draw_gamma(const GammaPosterior& g, Rng& rng) {
  if (!(g.shape > 0.0) || !(g.rate > 0.0)) throw NumericalError("non-positive Gamma parameters");
  std::gamma_distribution<double> dist(g.shape, 1.0 / g.rate);
  return dist(rng);
}

double sample_tau_eta(const ModelParams& params, const Hyperparams& hyper, Rng& rng) {
  return draw_gamma(tau_eta_posterior(params, hyper), rng);
}

double sample_tau_theta(const ModelParams& params, const Hyperparams& hyper, Rng& rng) {
  return draw_gamma(tau_theta_posterior(params, hyper), rng);
}

double sample_tau_gamma(const ModelParams& params, const Hyperparams& hyper, Rng& rng) {
  return draw_gamma(tau_gamma_posterior(params, hyper), rng);
}

}  // namespace dirnet
