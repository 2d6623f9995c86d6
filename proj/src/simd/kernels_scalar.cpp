// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "stimkit/simd/kernels.hpp"

namespace stimkit::simd::detail {
namespace {

template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void axpy(T a, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void gemv_t(const T* a, const T* b, std::size_t rows, std::size_t cols, T* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T ar = a[r];
    if (ar == T(0)) continue;
    const T* row = b + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += ar * row[c];
  }
}

template <typename T>
void gemv(const T* b, const T* x, std::size_t rows, std::size_t cols, T* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(b + r * cols, x, cols);
}

template <typename T>
void ger(const T* a, const T* x, std::size_t rows, std::size_t cols, T* b) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T ar = a[r];
    if (ar == T(0)) continue;
    T* row = b + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ar * x[c];
  }
}

template <typename T>
void gemm(const T* a, std::size_t a_row, std::size_t a_col, const T* b, T* c,
          std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T aik = a[i * a_row + kk * a_col];
      if (aik == T(0)) continue;
      const T* bk = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

template <typename T>
void adam(T* p, const T* g, T* m, T* v, std::size_t n,
          const AdamCoefficients<T>& k) {
  const T one_minus_b1 = T(1) - k.beta1;
  const T one_minus_b2 = T(1) - k.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const T gi = g[i];
    m[i] = k.beta1 * m[i] + one_minus_b1 * gi;
    v[i] = k.beta2 * v[i] + one_minus_b2 * (gi * gi);
    const T m_hat = m[i] / k.bias_correction1;
    const T v_hat = v[i] / k.bias_correction2;
    p[i] -= k.learning_rate * m_hat / (std::sqrt(v_hat) + k.epsilon);
  }
}

template <typename T>
const KernelTable<T> kTable = {Isa::kScalar, &dot<T>,  &axpy<T>, &gemv_t<T>,
                               &gemv<T>,     &ger<T>,  &gemm<T>,
                               &adam<T>};

}  // namespace

template <>
const KernelTable<float>& scalar_table<float>() {
  return kTable<float>;
}
template <>
const KernelTable<double>& scalar_table<double>() {
  return kTable<double>;
}

}  // namespace stimkit::simd::detail
