// Compiled with -mavx2 -mfma. Only reachable through avx2_kernels(), which
// checks CPU support before handing out this table.

#include <immintrin.h>

#include "gmto/simd.hpp"

namespace gmto::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_sum6_avx2(const double* w, const double* t, double* out) {
  const __m256d w0 = _mm256_set1_pd(w[0]);
  const __m256d w1 = _mm256_set1_pd(w[1]);
  const __m256d w2 = _mm256_set1_pd(w[2]);
  const __m256d w3 = _mm256_set1_pd(w[3]);
  const __m256d w4 = _mm256_set1_pd(w[4]);
  const __m256d w5 = _mm256_set1_pd(w[5]);
  for (std::size_t k = 0; k < kElemMatSize; k += 4) {
    __m256d s = _mm256_mul_pd(w0, _mm256_loadu_pd(t + k));
    s = _mm256_fmadd_pd(w1, _mm256_loadu_pd(t + 1 * kElemMatSize + k), s);
    s = _mm256_fmadd_pd(w2, _mm256_loadu_pd(t + 2 * kElemMatSize + k), s);
    s = _mm256_fmadd_pd(w3, _mm256_loadu_pd(t + 3 * kElemMatSize + k), s);
    s = _mm256_fmadd_pd(w4, _mm256_loadu_pd(t + 4 * kElemMatSize + k), s);
    s = _mm256_fmadd_pd(w5, _mm256_loadu_pd(t + 5 * kElemMatSize + k), s);
    _mm256_storeu_pd(out + k, s);
  }
}

void quadratic_forms6_avx2(const double* u, const double* t, double* out) {
  const __m256d u_lo = _mm256_loadu_pd(u);
  const __m256d u_hi = _mm256_loadu_pd(u + 4);
  for (std::size_t i = 0; i < kTemplates; ++i) {
    const double* m = t + i * kElemMatSize;
    // acc = sum_r u[r] * row_r, then u . acc
    __m256d acc_lo = _mm256_setzero_pd();
    __m256d acc_hi = _mm256_setzero_pd();
    for (std::size_t r = 0; r < 8; ++r) {
      const __m256d ur = _mm256_set1_pd(u[r]);
      acc_lo = _mm256_fmadd_pd(ur, _mm256_loadu_pd(m + r * 8), acc_lo);
      acc_hi = _mm256_fmadd_pd(ur, _mm256_loadu_pd(m + r * 8 + 4), acc_hi);
    }
    out[i] = hsum(_mm256_fmadd_pd(acc_hi, u_hi, _mm256_mul_pd(acc_lo, u_lo)));
  }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", dot_avx2, axpy_avx2, weighted_sum6_avx2,
                                 quadratic_forms6_avx2};
  return table;
}

}  // namespace gmto::simd
