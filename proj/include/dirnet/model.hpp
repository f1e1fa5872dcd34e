#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dirnet/matrix.hpp"
#include "dirnet/network.hpp"
#include "dirnet/transform.hpp"

namespace dirnet {

using Rng = std::mt19937_64;

/// Latent state at one iteration: log alpha_ij(t) = mu[t] + theta[i] + gamma[j].
/// gamma[0] is not free; it equals minus the sum of gamma[1..N-1].
struct ModelParams {
  std::vector<double> mu;
  std::vector<double> theta;
  std::vector<double> gamma;
  double tau_eta = 1.0;
  double tau_theta = 1.0;
  double tau_gamma = 1.0;

  static ModelParams zeros(std::size_t n_periods, std::size_t n_nodes);

  std::size_t n_periods() const noexcept { return mu.size(); }
  std::size_t n_nodes() const noexcept { return theta.size(); }

  /// Sum of the free coordinates gamma[1..N-1], accumulated left to right.
  double free_gamma_sum() const;
  /// gamma[0] = -free_gamma_sum().
  void enforce_gamma_constraint();
  /// Sets a free coordinate (l >= 1) and re-derives gamma[0].
  void set_free_gamma(std::size_t l, double value);
  /// gamma[0] + free_gamma_sum(); exactly 0 whenever the constraint holds.
  double gamma_constraint_residual() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Prior hyperparameters. Gamma priors are shape/rate.
struct Hyperparams {
  double tau_mu = 0.01;
  double a_eta = 0.01, b_eta = 0.01;
  double a_theta = 0.01, b_theta = 0.01;
  double a_gamma = 0.01, b_gamma = 0.01;

  void validate() const;
};

/// Relative exposures prepared for likelihood evaluation: log y with the
/// diagonal and masked rows set to 0, plus per-row constants.
class ModelData {
 public:
  /// Requires a relative (Y) network with N >= 3. Active rows must sum to
  /// 1 within 1e-10. Exact zeros are kept (their log is -inf), so an
  /// unfloored sparse row yields a non-finite density downstream.
  ModelData(const DynamicNetwork& relative, RowMask mask);
  explicit ModelData(const DynamicNetwork& relative);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_periods() const noexcept { return n_periods_; }
  const std::vector<NodeId>& node_ids() const noexcept { return node_ids_; }
  const std::vector<std::string>& period_labels() const noexcept { return period_labels_; }
  const RowMask& mask() const noexcept { return mask_; }
  bool active(std::size_t t, std::size_t i) const { return mask_.active(t, i); }

  /// log y_ij(t) for all j (diagonal entry 0).
  std::span<const double> log_y_row(std::size_t t, std::size_t i) const { return log_y_[t].row(i); }
  double log_y(std::size_t t, std::size_t i, std::size_t j) const { return log_y_[t](i, j); }
  /// sum_{j != i} log y_ij(t).
  double row_log_sum(std::size_t t, std::size_t i) const { return row_log_sum_(t, i); }

 private:
  std::size_t n_nodes_ = 0;
  std::size_t n_periods_ = 0;
  std::vector<NodeId> node_ids_;
  std::vector<std::string> period_labels_;
  RowMask mask_;
  std::vector<Matrix> log_y_;
  Matrix row_log_sum_;  // n_periods x n_nodes
};

/// exp(mu[t] + theta[i] + gamma[j]).
double alpha(const ModelParams& params, std::size_t t, std::size_t i, std::size_t j);

/// Dirichlet log-density of y under alpha (same length, self entry already
/// removed): lgamma(sum a) - sum lgamma(a) + sum (a - 1) log y.
double log_dirichlet_row(std::span<const double> y, std::span<const double> alpha);

/// Options shared by all density evaluations.
struct EvalOptions {
  int threads = 1;
};

/// Sum of Dirichlet row log-densities over active rows.
double log_likelihood(const ModelParams& params, const ModelData& data, const EvalOptions& opt = {});

/// Log prior density up to constants independent of sampled parameters.
double log_prior(const ModelParams& params, const Hyperparams& hyper);

double log_posterior(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                     const EvalOptions& opt = {});

/// Log full conditionals, up to constants, at a proposed value of one
/// coordinate with everything else taken from `params`.
double logfc_mu(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                std::size_t s, double value, const EvalOptions& opt = {});
double logfc_theta(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                   std::size_t k, double value, const EvalOptions& opt = {});
/// l >= 1; gamma[0] is re-derived from the constraint for the proposal.
double logfc_gamma(const ModelParams& params, const ModelData& data, const Hyperparams& hyper,
                   std::size_t l, double value, const EvalOptions& opt = {});

/// Shape and rate of a conjugate Gamma full conditional.
struct GammaPosterior {
  double shape = 0.0;
  double rate = 0.0;
};

GammaPosterior tau_eta_posterior(const ModelParams& params, const Hyperparams& hyper);
GammaPosterior tau_theta_posterior(const ModelParams& params, const Hyperparams& hyper);
GammaPosterior tau_gamma_posterior(const ModelParams& params, const Hyperparams& hyper);

double draw_gamma(const GammaPosterior& g, Rng& rng);
double sample_tau_eta(const ModelParams& params, const Hyperparams& hyper, Rng& rng);
double sample_tau_theta(const ModelParams& params, const Hyperparams& hyper, Rng& rng);
double sample_tau_gamma(const ModelParams& params, const Hyperparams& hyper, Rng& rng);

}  // namespace dirnet
