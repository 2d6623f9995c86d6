// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop kernels for the neural engine. Each kernel has a scalar
// reference implementation and, where the CPU allows, an AVX2 variant picked
// once at startup. Element-wise kernels (axpy, gemv_t, ger, adam) give
// bit-identical results across variants; reductions (dot, gemv, gemm) agree
// to rounding.

namespace stimkit::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

template <typename T>
struct AdamCoefficients {
  T learning_rate;
  T beta1;
  T beta2;
  T epsilon;
  T bias_correction1;  // 1 - beta1^t
  T bias_correction2;  // 1 - beta2^t
};

template <typename T>
struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  T (*dot)(const T* x, const T* y, std::size_t n);
  // y += a * x
  void (*axpy)(T a, const T* x, T* y, std::size_t n);
  // y[c] += sum_r a[r] * b[r, c]; rows with a[r] == 0 are skipped.
  void (*gemv_t)(const T* a, const T* b, std::size_t rows, std::size_t cols,
                 T* y);
  // y[r] = sum_c b[r, c] * x[c]
  void (*gemv)(const T* b, const T* x, std::size_t rows, std::size_t cols,
               T* y);
  // b[r, c] += a[r] * x[c]; rows with a[r] == 0 are skipped.
  void (*ger)(const T* a, const T* x, std::size_t rows, std::size_t cols,
              T* b);
  // c[i, j] += sum_k a(i, k) * b[k, j] with a(i, k) = a[i * a_row + k * a_col],
  // b row-major [k, n], c row-major [m, n]. Sums run over k in ascending
  // order; terms with a(i, k) == 0 may be skipped.
  void (*gemm)(const T* a, std::size_t a_row, std::size_t a_col, const T* b,
               T* c, std::size_t m, std::size_t k, std::size_t n);
  void (*adam)(T* params, const T* grads, T* m, T* v, std::size_t n,
               const AdamCoefficients<T>& coeff);
};

bool isa_supported(Isa isa);

// The variant selected for this process: AVX2 when the CPU supports it,
// unless STIMKIT_SIMD=scalar is set in the environment.
Isa active_isa();

template <typename T>
const KernelTable<T>& kernels(Isa isa);

template <typename T>
const KernelTable<T>& kernels() {
  return kernels<T>(active_isa());
}

namespace detail {
template <typename T>
const KernelTable<T>& scalar_table();
template <typename T>
const KernelTable<T>& avx2_table();
}  // namespace detail

}  // namespace stimkit::simd
