// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "stimkit/simd/kernels.hpp"

namespace stimkit::simd::detail {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using type = __m256;
  static constexpr std::size_t kLanes = 8;
  static type load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, type v) { _mm256_storeu_ps(p, v); }
  static type set1(float x) { return _mm256_set1_ps(x); }
  static type zero() { return _mm256_setzero_ps(); }
  static type add(type a, type b) { return _mm256_add_ps(a, b); }
  static type sub(type a, type b) { return _mm256_sub_ps(a, b); }
  static type mul(type a, type b) { return _mm256_mul_ps(a, b); }
  static type div(type a, type b) { return _mm256_div_ps(a, b); }
  static type sqrt(type a) { return _mm256_sqrt_ps(a); }
  static type fmadd(type a, type b, type c) { return _mm256_fmadd_ps(a, b, c); }
  static float hsum(type v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Vec<double> {
  using type = __m256d;
  static constexpr std::size_t kLanes = 4;
  static type load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, type v) { _mm256_storeu_pd(p, v); }
  static type set1(double x) { return _mm256_set1_pd(x); }
  static type zero() { return _mm256_setzero_pd(); }
  static type add(type a, type b) { return _mm256_add_pd(a, b); }
  static type sub(type a, type b) { return _mm256_sub_pd(a, b); }
  static type mul(type a, type b) { return _mm256_mul_pd(a, b); }
  static type div(type a, type b) { return _mm256_div_pd(a, b); }
  static type sqrt(type a) { return _mm256_sqrt_pd(a); }
  static type fmadd(type a, type b, type c) { return _mm256_fmadd_pd(a, b, c); }
  static double hsum(type v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * L <= n; i += 2 * L) {
    acc0 = V::fmadd(V::load(x + i), V::load(y + i), acc0);
    acc1 = V::fmadd(V::load(x + i + L), V::load(y + i + L), acc1);
  }
  for (; i + L <= n; i += L) acc0 = V::fmadd(V::load(x + i), V::load(y + i), acc0);
  T acc = V::hsum(V::add(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

// Element-wise kernels use separate multiply and add (no FMA) so that every
// lane rounds exactly like the scalar loop.
template <typename T>
void axpy(T a, const T* x, T* y, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  const auto va = V::set1(a);
  std::size_t i = 0;
  for (; i + L <= n; i += L) {
    V::store(y + i, V::add(V::load(y + i), V::mul(va, V::load(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void gemv_t(const T* a, const T* b, std::size_t rows, std::size_t cols, T* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (a[r] == T(0)) continue;
    axpy(a[r], b + r * cols, y, cols);
  }
}

template <typename T>
void gemv(const T* b, const T* x, std::size_t rows, std::size_t cols, T* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(b + r * cols, x, cols);
}

template <typename T>
void ger(const T* a, const T* x, std::size_t rows, std::size_t cols, T* b) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (a[r] == T(0)) continue;
    axpy(a[r], x, b + r * cols, cols);
  }
}

// Register tile of R rows by two vectors, accumulated with FMA.
template <typename T, std::size_t R>
void gemm_rows(const T* a, std::size_t a_row, std::size_t a_col, const T* b,
               T* c, std::size_t k, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  std::size_t j = 0;
  for (; j + 2 * L <= n; j += 2 * L) {
    typename V::type acc[R][2];
    for (std::size_t r = 0; r < R; ++r) {
      acc[r][0] = V::load(c + r * n + j);
      acc[r][1] = V::load(c + r * n + j + L);
    }
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T* ak = a + kk * a_col;
      const auto b0 = V::load(b + kk * n + j);
      const auto b1 = V::load(b + kk * n + j + L);
      for (std::size_t r = 0; r < R; ++r) {
        const auto ar = V::set1(ak[r * a_row]);
        acc[r][0] = V::fmadd(ar, b0, acc[r][0]);
        acc[r][1] = V::fmadd(ar, b1, acc[r][1]);
      }
    }
    for (std::size_t r = 0; r < R; ++r) {
      V::store(c + r * n + j, acc[r][0]);
      V::store(c + r * n + j + L, acc[r][1]);
    }
  }
  for (; j + L <= n; j += L) {
    typename V::type acc[R];
    for (std::size_t r = 0; r < R; ++r) acc[r] = V::load(c + r * n + j);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const auto bk = V::load(b + kk * n + j);
      for (std::size_t r = 0; r < R; ++r) {
        const T ar = a[r * a_row + kk * a_col];
        if (ar != T(0)) acc[r] = V::fmadd(V::set1(ar), bk, acc[r]);
      }
    }
    for (std::size_t r = 0; r < R; ++r) V::store(c + r * n + j, acc[r]);
  }
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < R; ++r) {
      T acc = c[r * n + j];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const T ar = a[r * a_row + kk * a_col];
        if (ar != T(0)) acc = std::fma(ar, b[kk * n + j], acc);
      }
      c[r * n + j] = acc;
    }
  }
}

template <typename T>
void gemm(const T* a, std::size_t a_row, std::size_t a_col, const T* b, T* c,
          std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 6 <= m; i += 6) gemm_rows<T, 6>(a + i * a_row, a_row, a_col, b, c + i * n, k, n);
  for (; i < m; ++i) gemm_rows<T, 1>(a + i * a_row, a_row, a_col, b, c + i * n, k, n);
}

template <typename T>
void adam(T* p, const T* g, T* m, T* v, std::size_t n,
          const AdamCoefficients<T>& k) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  const T one_minus_b1 = T(1) - k.beta1;
  const T one_minus_b2 = T(1) - k.beta2;
  const auto b1 = V::set1(k.beta1);
  const auto b2 = V::set1(k.beta2);
  const auto c1 = V::set1(one_minus_b1);
  const auto c2 = V::set1(one_minus_b2);
  const auto bc1 = V::set1(k.bias_correction1);
  const auto bc2 = V::set1(k.bias_correction2);
  const auto lr = V::set1(k.learning_rate);
  const auto eps = V::set1(k.epsilon);
  std::size_t i = 0;
  for (; i + L <= n; i += L) {
    const auto gi = V::load(g + i);
    const auto mi = V::add(V::mul(b1, V::load(m + i)), V::mul(c1, gi));
    const auto vi = V::add(V::mul(b2, V::load(v + i)), V::mul(c2, V::mul(gi, gi)));
    V::store(m + i, mi);
    V::store(v + i, vi);
    const auto m_hat = V::div(mi, bc1);
    const auto v_hat = V::div(vi, bc2);
    const auto step = V::div(V::mul(lr, m_hat), V::add(V::sqrt(v_hat), eps));
    V::store(p + i, V::sub(V::load(p + i), step));
  }
  for (; i < n; ++i) {
    const T gi = g[i];
    m[i] = k.beta1 * m[i] + one_minus_b1 * gi;
    v[i] = k.beta2 * v[i] + one_minus_b2 * (gi * gi);
    const T m_hat = m[i] / k.bias_correction1;
    const T v_hat = v[i] / k.bias_correction2;
    p[i] -= k.learning_rate * m_hat / (std::sqrt(v_hat) + k.epsilon);
  }
}

template <typename T>
const KernelTable<T> kTable = {Isa::kAvx2, &dot<T>, &axpy<T>, &gemv_t<T>,
                               &gemv<T>,   &ger<T>, &gemm<T>,
                               &adam<T>};

}  // namespace

template <>
const KernelTable<float>& avx2_table<float>() {
  return kTable<float>;
}
template <>
const KernelTable<double>& avx2_table<double>() {
  return kTable<double>;
}

}  // namespace stimkit::simd::detail
