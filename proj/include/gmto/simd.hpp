#pragma once

// Data-parallel inner loops used by the field and fem modules.
//
// Every kernel has a scalar reference implementation. Vectorized variants are
// compiled in separate translation units with their own architecture flags and
// are only selected when the running CPU supports them. The variants are not
// bitwise identical to the reference (FMA contraction, different summation
// order); tests/unit/test_simd.cpp pins the tolerance.

#include <cstddef>
#include <string_view>

namespace gmto::simd {

/// Number of entries in one 8x8 element matrix.
inline constexpr std::size_t kElemMatSize = 64;
/// Number of template matrices (one per independent elasticity component).
inline constexpr std::size_t kTemplates = 6;

struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // out[k] = sum_i weights[i] * templates[i * 64 + k],  i < 6, k < 64
  void (*weighted_sum6)(const double* weights, const double* templates, double* out);

  // out[i] = u^T T_i u with T_i the i-th row-major 8x8 template, i < 6
  void (*quadratic_forms6)(const double* u, const double* templates, double* out);
};

const KernelTable& scalar_kernels();

/// AVX2+FMA table, or nullptr when not compiled in or unsupported by the CPU.
const KernelTable* avx2_kernels();

/// Table used by the library. Chosen once per process: GMTO_SIMD=scalar forces
/// the reference path, GMTO_SIMD=avx2 requests AVX2 (falls back if missing),
/// anything else picks the widest supported variant.
const KernelTable& active_kernels();

}  // namespace gmto::simd
