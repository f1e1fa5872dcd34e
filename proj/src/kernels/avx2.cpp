#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dirnet/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define DIRNET_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

namespace dirnet::kernels::avx2 {

#if DIRNET_HAVE_AVX2_KERNELS

#define DIRNET_AVX2 __attribute__((target("avx2,fma")))

namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kLog2e = 1.44269504088896338700e+00;
constexpr double kHalfLog2Pi = 0.91893853320467274178;

DIRNET_AVX2 inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.78);
  const __m256d lo = _mm256_set1_pd(-708.39);
  const __m256d nan_lanes = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  const __m256d over = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
  const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Lo), r);

  // Taylor series of e^r on |r| <= ln2/2, degree 13 (truncation < 1e-17)
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^k as two factors so k = 1024 and k = -1022 stay representable
  const __m256d k1 = _mm256_floor_pd(_mm256_mul_pd(k, _mm256_set1_pd(0.5)));
  const __m256d k2 = _mm256_sub_pd(k, k1);
  const __m256d magic = _mm256_set1_pd(4503599627370496.0 + 1023.0);  // 2^52 + bias
  const __m256d s1 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_castpd_si256(_mm256_add_pd(k1, magic)), 52));
  const __m256d s2 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_castpd_si256(_mm256_add_pd(k2, magic)), 52));
  __m256d y = _mm256_mul_pd(_mm256_mul_pd(p, s1), s2);

  y = _mm256_blendv_pd(y, _mm256_set1_pd(HUGE_VAL), over);
  y = _mm256_blendv_pd(y, _mm256_setzero_pd(), under);
  y = _mm256_blendv_pd(y, x, nan_lanes);
  return y;
}

// Natural log for positive normal inputs; +inf maps to +inf, 0 to -inf.
DIRNET_AVX2 inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i exp_raw = _mm256_srli_epi64(bits, 52);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  const __m256d two52 = _mm256_set1_pd(4503599627370496.0);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(exp_raw, _mm256_castpd_si256(two52))), two52);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.41421356237309504880), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s2 = _mm256_mul_pd(s, s);
  // atanh series: log m = 2 s (1 + s^2/3 + s^4/5 + ...), |s| <= 0.1716
  __m256d p = _mm256_set1_pd(1.0 / 23.0);
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 21.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 19.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 3.0));
  const __m256d two_s = _mm256_add_pd(s, s);
  // 2s + 2s * s2 * p keeps the leading term exact
  const __m256d log_m = _mm256_fmadd_pd(_mm256_mul_pd(two_s, s2), p, two_s);

  __m256d y = _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Lo), log_m);
  y = _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Hi), y);

  const __m256d inf = _mm256_set1_pd(HUGE_VAL);
  y = _mm256_blendv_pd(y, inf, _mm256_cmp_pd(x, inf, _CMP_EQ_OQ));
  y = _mm256_blendv_pd(y, _mm256_set1_pd(-HUGE_VAL), _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_EQ_OQ));
  y = _mm256_blendv_pd(y, _mm256_set1_pd(NAN), _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ));
  y = _mm256_blendv_pd(y, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  return y;
}

// log Gamma(x) for x > 0: shift x < 8 up by eight via the recurrence, then
// Stirling's series through z^-15.
DIRNET_AVX2 inline __m256d lgamma_pd(__m256d x) {
  const __m256d eight = _mm256_set1_pd(8.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d small = _mm256_cmp_pd(x, eight, _CMP_LT_OQ);
  const __m256d z = _mm256_blendv_pd(x, _mm256_add_pd(x, eight), small);

  __m256d prod = x;
  __m256d term = x;
  for (int k = 1; k < 8; ++k) {
    term = _mm256_add_pd(term, one);
    prod = _mm256_mul_pd(prod, term);
  }
  prod = _mm256_blendv_pd(one, prod, small);

  const __m256d w = _mm256_div_pd(one, z);
  const __m256d w2 = _mm256_mul_pd(w, w);
  __m256d series = _mm256_set1_pd(-3617.0 / 122400.0);
  series = _mm256_fmadd_pd(series, w2, _mm256_set1_pd(1.0 / 156.0));
  series = _mm256_fmadd_pd(series, w2, _mm256_set1_pd(-691.0 / 360360.0));
  series = _mm256_fmadd_pd(series, w2, _mm256_set1_pd(1.0 / 1188.0));
  series = _mm256_fmadd_pd(series, w2, _mm256_set1_pd(-1.0 / 1680.0));
  series = _mm256_fmadd_pd(series, w2, _mm256_set1_pd(1.0 / 1260.0));
  series = _mm256_fmadd_pd(series, w2, _mm256_set1_pd(-1.0 / 360.0));
  series = _mm256_fmadd_pd(series, w2, _mm256_set1_pd(1.0 / 12.0));
  series = _mm256_mul_pd(series, w);

  const __m256d log_z = log_pd(z);
  __m256d y = _mm256_fmsub_pd(_mm256_sub_pd(z, _mm256_set1_pd(0.5)), log_z, z);
  y = _mm256_add_pd(y, _mm256_add_pd(_mm256_set1_pd(kHalfLog2Pi), series));
  y = _mm256_sub_pd(y, log_pd(prod));

  const __m256d inf = _mm256_set1_pd(HUGE_VAL);
  const __m256d not_positive = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LE_OQ);
  y = _mm256_blendv_pd(y, inf, _mm256_or_pd(not_positive, _mm256_cmp_pd(x, inf, _CMP_EQ_OQ)));
  y = _mm256_blendv_pd(y, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  return y;
}

DIRNET_AVX2 inline __m256i tail_load_mask(std::size_t remaining) {
  const __m256i lanes = _mm256_set_epi64x(3, 2, 1, 0);
  return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(remaining)), lanes);
}

// Lane mask from four 0/1 bytes.
DIRNET_AVX2 inline __m256d include_mask(const std::uint8_t* flags) {
  std::int32_t packed = 0;
  std::memcpy(&packed, flags, 4);
  const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
  return _mm256_castsi256_pd(_mm256_cmpgt_epi64(wide, _mm256_setzero_si256()));
}

DIRNET_AVX2 inline double horizontal_sum(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

template <typename Body>
DIRNET_AVX2 inline void for_each_block(std::size_t n, std::span<const std::uint8_t> include, Body&& body) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d keep = include.empty() ? _mm256_castsi256_pd(_mm256_set1_epi64x(-1))
                                         : include_mask(include.data() + k);
    body(k, _mm256_set1_epi64x(-1), keep);
  }
  if (k < n) {
    const std::size_t rem = n - k;
    const __m256i load = tail_load_mask(rem);
    __m256d keep = _mm256_castsi256_pd(load);
    if (!include.empty()) {
      std::uint8_t flags[4] = {0, 0, 0, 0};
      std::memcpy(flags, include.data() + k, rem);
      keep = _mm256_and_pd(keep, include_mask(flags));
    }
    body(k, load, keep);
  }
}

}  // namespace

DIRNET_AVX2 RowTerms row_terms(double offset, std::span<const double> log_weight,
                               std::span<const double> log_y, std::span<const std::uint8_t> include) {
  const __m256d off = _mm256_set1_pd(offset);
  __m256d acc_alpha = _mm256_setzero_pd();
  __m256d acc_lgamma = _mm256_setzero_pd();
  __m256d acc_aly = _mm256_setzero_pd();
  for_each_block(log_weight.size(), include, [&](std::size_t k, __m256i load, __m256d keep) DIRNET_AVX2 {
    const __m256d lw = _mm256_maskload_pd(log_weight.data() + k, load);
    const __m256d ly = _mm256_maskload_pd(log_y.data() + k, load);
    const __m256d alpha = exp_pd(_mm256_add_pd(off, lw));
    acc_alpha = _mm256_add_pd(acc_alpha, _mm256_and_pd(alpha, keep));
    acc_lgamma = _mm256_add_pd(acc_lgamma, _mm256_and_pd(lgamma_pd(alpha), keep));
    acc_aly = _mm256_add_pd(acc_aly, _mm256_and_pd(_mm256_mul_pd(alpha, ly), keep));
  });
  return {horizontal_sum(acc_alpha), horizontal_sum(acc_lgamma), horizontal_sum(acc_aly)};
}

namespace {

template <typename F>
DIRNET_AVX2 void apply(std::span<const double> in, std::span<double> out, F&& f) {
  if (out.size() < in.size()) throw std::invalid_argument("output span too short");
  for_each_block(in.size(), {}, [&](std::size_t k, __m256i load, __m256d) DIRNET_AVX2 {
    const __m256d v = _mm256_maskload_pd(in.data() + k, load);
    _mm256_maskstore_pd(out.data() + k, load, f(v));
  });
}

}  // namespace

DIRNET_AVX2 void exp(std::span<const double> in, std::span<double> out) {
  apply(in, out, [](__m256d v) DIRNET_AVX2 { return exp_pd(v); });
}
DIRNET_AVX2 void log(std::span<const double> in, std::span<double> out) {
  apply(in, out, [](__m256d v) DIRNET_AVX2 { return log_pd(v); });
}
DIRNET_AVX2 void lgamma(std::span<const double> in, std::span<double> out) {
  apply(in, out, [](__m256d v) DIRNET_AVX2 { return lgamma_pd(v); });
}

#else  // no AVX2 build support

[[noreturn]] static void unavailable() { throw std::runtime_error("AVX2 kernels not built"); }

RowTerms row_terms(double, std::span<const double>, std::span<const double>, std::span<const std::uint8_t>) {
  unavailable();
}
void exp(std::span<const double>, std::span<double>) { unavailable(); }
void log(std::span<const double>, std::span<double>) { unavailable(); }
void lgamma(std::span<const double>, std::span<double>) { unavailable(); }

#endif

}  // namespace dirnet::kernels::avx2
