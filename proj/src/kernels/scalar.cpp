#include <cmath>

#include "dirnet/kernels.hpp"

namespace dirnet::kernels {

double log_gamma(double x) noexcept {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

namespace scalar {

RowTerms row_terms(double offset, std::span<const double> log_weight, std::span<const double> log_y,
                   std::span<const std::uint8_t> include) {
  RowTerms terms;
  const std::size_t n = log_weight.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (!include.empty() && !include[k]) continue;
    const double alpha = std::exp(offset + log_weight[k]);
    terms.sum_alpha += alpha;
    terms.sum_lgamma += log_gamma(alpha);
    terms.sum_alpha_logy += alpha * log_y[k];
  }
  return terms;
}

}  // namespace scalar
}  // namespace dirnet::kernels
