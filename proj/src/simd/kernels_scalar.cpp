#include "gmto/simd.hpp"

namespace gmto::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_sum6_scalar(const double* w, const double* t, double* out) {
  for (std::size_t k = 0; k < kElemMatSize; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < kTemplates; ++i) s += w[i] * t[i * kElemMatSize + k];
    out[k] = s;
  }
}

void quadratic_forms6_scalar(const double* u, const double* t, double* out) {
  for (std::size_t i = 0; i < kTemplates; ++i) {
    const double* m = t + i * kElemMatSize;
    double s = 0.0;
    for (std::size_t r = 0; r < 8; ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < 8; ++c) row += m[r * 8 + c] * u[c];
      s += u[r] * row;
    }
    out[i] = s;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, weighted_sum6_scalar,
                                 quadratic_forms6_scalar};
  return table;
}

}  // namespace gmto::simd
