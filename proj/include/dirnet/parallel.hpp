#pragma once

#include <cstddef>
#include <span>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dirnet {

/// Sum in a fixed pairwise tree; the result depends only on the input order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Evaluates term(0..n-1) on up to `threads` workers and reduces in index
/// order, so the result is bit-identical for every thread count.
template <typename Term>
double ordered_sum(std::size_t n, int threads, Term&& term) {
  thread_local std::vector<double> buffer;
  // nested calls from inside a term would clobber the shared buffer
  std::vector<double> local;
  std::vector<double>& parts = buffer.empty() ? buffer : local;
  parts.assign(n, 0.0);
#if defined(_OPENMP)
  if (threads > 1) {
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long long k = 0; k < count; ++k) parts[static_cast<std::size_t>(k)] = term(static_cast<std::size_t>(k));
  } else
#endif
  {
    for (std::size_t k = 0; k < n; ++k) parts[k] = term(k);
  }
  const double s = pairwise_sum(parts);
  parts.clear();
  return s;
}

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace dirnet
