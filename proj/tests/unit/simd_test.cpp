// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

// Scalar reference kernels against a long-double oracle, and every vector
// variant against the scalar reference.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "stimkit/simd/kernels.hpp"

namespace stimkit::simd {
namespace {

template <typename T>
class Kernels : public ::testing::Test {
 protected:
  std::mt19937_64 rng{1234};

  std::vector<T> random(std::size_t n, double zero_fraction = 0.0) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> z(0.0, 1.0);
    std::vector<T> v(n);
    for (auto& x : v) x = z(rng) < zero_fraction ? T(0) : static_cast<T>(u(rng));
    return v;
  }

  static std::vector<Isa> vector_isas() {
    std::vector<Isa> out;
    if (isa_supported(Isa::kAvx2)) out.push_back(Isa::kAvx2);
    return out;
  }

  // Bound for a reduction of n terms whose magnitudes sum to `mass`.
  static double tolerance(std::size_t n, double mass) {
    return 4.0 * static_cast<double>(n + 1) * std::numeric_limits<T>::epsilon() * (mass + 1e-30);
  }
};

using Types = ::testing::Types<float, double>;
TYPED_TEST_SUITE(Kernels, Types);

const std::size_t kSizes[] = {0, 1, 3, 4, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100};

TYPED_TEST(Kernels, ScalarDotMatchesOracle) {
  using T = TypeParam;
  const auto& k = kernels<T>(Isa::kScalar);
  for (std::size_t n : kSizes) {
    const auto x = this->random(n), y = this->random(n);
    long double ref = 0, mass = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ref += static_cast<long double>(x[i]) * y[i];
      mass += std::fabs(static_cast<long double>(x[i]) * y[i]);
    }
    EXPECT_NEAR(k.dot(x.data(), y.data(), n), static_cast<double>(ref), this->tolerance(n, static_cast<double>(mass)));
  }
}

TYPED_TEST(Kernels, ScalarGemmMatchesOracle) {
  using T = TypeParam;
  const auto& k = kernels<T>(Isa::kScalar);
  const std::size_t m = 5, kk = 9, n = 11;
  const auto a = this->random(m * kk, 0.3), b = this->random(kk * n);
  std::vector<T> c(m * n, T(0.5));
  k.gemm(a.data(), kk, 1, b.data(), c.data(), m, kk, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double ref = 0.5, mass = 0.5;
      for (std::size_t p = 0; p < kk; ++p) {
        ref += static_cast<long double>(a[i * kk + p]) * b[p * n + j];
        mass += std::fabs(static_cast<long double>(a[i * kk + p]) * b[p * n + j]);
      }
      EXPECT_NEAR(c[i * n + j], static_cast<double>(ref), this->tolerance(kk, static_cast<double>(mass)));
    }
  }
}

TYPED_TEST(Kernels, ScalarAdamMatchesFormula) {
  using T = TypeParam;
  const auto& k = kernels<T>(Isa::kScalar);
  auto p = this->random(13), g = this->random(13), m = this->random(13), v = this->random(13);
  for (auto& x : v) x = std::abs(x);
  const AdamCoefficients<T> c{T(1e-3), T(0.9), T(0.999), T(1e-8), T(1) - T(0.9), T(1) - T(0.999)};
  auto p2 = p, m2 = m, v2 = v;
  k.adam(p.data(), g.data(), m.data(), v.data(), 13, c);
  for (std::size_t i = 0; i < 13; ++i) {
    const double mm = 0.9 * m2[i] + 0.1 * g[i];
    const double vv = 0.999 * v2[i] + 0.001 * g[i] * g[i];
    const double step = 1e-3 * (mm / 0.1) / (std::sqrt(vv / 0.001) + 1e-8);
    EXPECT_NEAR(m[i], mm, 1e-6);
    EXPECT_NEAR(v[i], vv, 1e-6);
    EXPECT_NEAR(p[i], p2[i] - step, 1e-5);
  }
}

TYPED_TEST(Kernels, DotEquivalent) {
  using T = TypeParam;
  const auto& ref = kernels<T>(Isa::kScalar);
  for (Isa isa : this->vector_isas()) {
    const auto& vec = kernels<T>(isa);
    for (std::size_t n : kSizes) {
      const auto x = this->random(n), y = this->random(n);
      double mass = 0;
      for (std::size_t i = 0; i < n; ++i) mass += std::abs(double(x[i]) * y[i]);
      EXPECT_NEAR(vec.dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n), this->tolerance(n, mass))
          << to_string(isa) << " n=" << n;
    }
  }
}

TYPED_TEST(Kernels, AxpyBitIdentical) {
  using T = TypeParam;
  const auto& ref = kernels<T>(Isa::kScalar);
  for (Isa isa : this->vector_isas()) {
    for (std::size_t n : kSizes) {
      const auto x = this->random(n);
      auto y1 = this->random(n);
      auto y2 = y1;
      ref.axpy(T(0.37), x.data(), y1.data(), n);
      kernels<T>(isa).axpy(T(0.37), x.data(), y2.data(), n);
      EXPECT_EQ(y1, y2) << to_string(isa) << " n=" << n;
    }
  }
}

TYPED_TEST(Kernels, GemvTransposedBitIdentical) {
  using T = TypeParam;
  const auto& ref = kernels<T>(Isa::kScalar);
  for (Isa isa : this->vector_isas()) {
    for (std::size_t rows : {1u, 3u, 8u, 13u}) {
      for (std::size_t cols : kSizes) {
        const auto a = this->random(rows, 0.4), b = this->random(rows * cols);
        auto y1 = this->random(cols);
        auto y2 = y1;
        ref.gemv_t(a.data(), b.data(), rows, cols, y1.data());
        kernels<T>(isa).gemv_t(a.data(), b.data(), rows, cols, y2.data());
        EXPECT_EQ(y1, y2) << to_string(isa) << " " << rows << "x" << cols;
      }
    }
  }
}

TYPED_TEST(Kernels, GemvEquivalent) {
  using T = TypeParam;
  const auto& ref = kernels<T>(Isa::kScalar);
  for (Isa isa : this->vector_isas()) {
    for (std::size_t rows : {1u, 5u, 16u}) {
      for (std::size_t cols : kSizes) {
        const auto b = this->random(rows * cols), x = this->random(cols);
        std::vector<T> y1(rows), y2(rows);
        ref.gemv(b.data(), x.data(), rows, cols, y1.data());
        kernels<T>(isa).gemv(b.data(), x.data(), rows, cols, y2.data());
        for (std::size_t r = 0; r < rows; ++r) {
          double mass = 0;
          for (std::size_t c = 0; c < cols; ++c) mass += std::abs(double(b[r * cols + c]) * x[c]);
          EXPECT_NEAR(y1[r], y2[r], this->tolerance(cols, mass));
        }
      }
    }
  }
}

TYPED_TEST(Kernels, GerBitIdentical) {
  using T = TypeParam;
  const auto& ref = kernels<T>(Isa::kScalar);
  for (Isa isa : this->vector_isas()) {
    for (std::size_t rows : {1u, 4u, 9u}) {
      for (std::size_t cols : kSizes) {
        const auto a = this->random(rows, 0.3), x = this->random(cols);
        auto b1 = this->random(rows * cols);
        auto b2 = b1;
        ref.ger(a.data(), x.data(), rows, cols, b1.data());
        kernels<T>(isa).ger(a.data(), x.data(), rows, cols, b2.data());
        EXPECT_EQ(b1, b2) << to_string(isa) << " " << rows << "x" << cols;
      }
    }
  }
}

TYPED_TEST(Kernels, GemmEquivalentAllShapesAndStrides) {
  using T = TypeParam;
  const auto& ref = kernels<T>(Isa::kScalar);
  for (Isa isa : this->vector_isas()) {
    for (std::size_t m : {1u, 5u, 6u, 7u, 13u}) {
      for (std::size_t kk : {1u, 9u, 27u}) {
        for (std::size_t n : {1u, 8u, 15u, 16u, 17u, 40u}) {
          for (bool transposed : {false, true}) {
            const auto a = this->random(m * kk, 0.5), b = this->random(kk * n);
            const std::size_t a_row = transposed ? 1 : kk;
            const std::size_t a_col = transposed ? m : 1;
            auto c1 = this->random(m * n);
            auto c2 = c1;
            ref.gemm(a.data(), a_row, a_col, b.data(), c1.data(), m, kk, n);
            kernels<T>(isa).gemm(a.data(), a_row, a_col, b.data(), c2.data(), m, kk, n);
            for (std::size_t i = 0; i < m; ++i) {
              for (std::size_t j = 0; j < n; ++j) {
                double mass = std::abs(double(c2[i * n + j]));
                for (std::size_t p = 0; p < kk; ++p) mass += std::abs(double(a[i * a_row + p * a_col]) * b[p * n + j]);
                EXPECT_NEAR(c1[i * n + j], c2[i * n + j], this->tolerance(kk, mass))
                    << to_string(isa) << " " << m << "x" << kk << "x" << n << (transposed ? " T" : "");
              }
            }
          }
        }
      }
    }
  }
}

TYPED_TEST(Kernels, AdamBitIdentical) {
  using T = TypeParam;
  const auto& ref = kernels<T>(Isa::kScalar);
  for (Isa isa : this->vector_isas()) {
    for (std::size_t n : kSizes) {
      auto p1 = this->random(n), g = this->random(n), m1 = this->random(n), v1 = this->random(n);
      for (auto& x : v1) x = std::abs(x);
      auto p2 = p1, m2 = m1, v2 = v1;
      const AdamCoefficients<T> c{T(1e-4), T(0.9), T(0.999), T(1e-8), T(0.271), T(0.00399)};
      ref.adam(p1.data(), g.data(), m1.data(), v1.data(), n, c);
      kernels<T>(isa).adam(p2.data(), g.data(), m2.data(), v2.data(), n, c);
      EXPECT_EQ(p1, p2);
      EXPECT_EQ(m1, m2);
      EXPECT_EQ(v1, v2);
    }
  }
}

TEST(Dispatch, ScalarAlwaysAvailable) {
  EXPECT_TRUE(isa_supported(Isa::kScalar));
  EXPECT_EQ(kernels<float>(Isa::kScalar).isa, Isa::kScalar);
  EXPECT_EQ(kernels<double>(active_isa()).isa, active_isa());
}

}  // namespace
}  // namespace stimkit::simd
