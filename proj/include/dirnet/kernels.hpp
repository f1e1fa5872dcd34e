#pragma once

// Hot inner loops of the Dirichlet likelihood.
//
// Every kernel has a scalar reference built on the C library (exp, lgamma)
// and a SIMD variant with its own vectorized exp/log/lgamma. The variant is
// picked once per process from the CPU's capabilities; DIRNET_KERNEL=scalar
// (or set_isa) forces the reference. Variants agree to ~1e-13 relative but
// are not bit-identical, so a chain is reproducible per selected ISA.

#include <cstdint>
#include <span>
#include <string_view>

namespace dirnet::kernels {

/// Partial sums over the entries of one Dirichlet row, alpha_k = exp(offset + log_weight[k]).
struct RowTerms {
  double sum_alpha = 0.0;       // sum alpha_k
  double sum_lgamma = 0.0;      // sum lgamma(alpha_k)
  double sum_alpha_logy = 0.0;  // sum alpha_k * log_y[k]

  RowTerms& operator+=(const RowTerms& o) noexcept {
    sum_alpha += o.sum_alpha;
    sum_lgamma += o.sum_lgamma;
    sum_alpha_logy += o.sum_alpha_logy;
    return *this;
  }
};

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;
/// Accepts "scalar", "avx2" or "auto" (best available).
Isa parse_isa(std::string_view name);
bool isa_available(Isa isa) noexcept;
Isa best_isa() noexcept;

Isa active_isa() noexcept;
/// Throws std::invalid_argument if the ISA is not supported by this CPU.
void set_isa(Isa isa);

/// `include` is either empty (all entries) or a 0/1 flag per entry.
RowTerms row_terms(double offset, std::span<const double> log_weight, std::span<const double> log_y,
                   std::span<const std::uint8_t> include = {});

/// Reentrant log|Gamma(x)|.
double log_gamma(double x) noexcept;

namespace scalar {
RowTerms row_terms(double offset, std::span<const double> log_weight, std::span<const double> log_y,
                   std::span<const std::uint8_t> include);
}  // namespace scalar

namespace avx2 {
RowTerms row_terms(double offset, std::span<const double> log_weight, std::span<const double> log_y,
                   std::span<const std::uint8_t> include);

/// Lane-wise math behind the kernels, exposed for accuracy tests. Each
/// processes `in.size()` values into `out`.
void exp(std::span<const double> in, std::span<double> out);
void log(std::span<const double> in, std::span<double> out);
void lgamma(std::span<const double> in, std::span<double> out);
}  // namespace avx2

}  // namespace dirnet::kernels
