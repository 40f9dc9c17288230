// Copyright 2026 The nilmkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scalar and AVX2 kernels must agree. FMA contraction and reordered sums
// make bitwise equality impossible for reductions, so those compare against
// a bound scaled by the magnitude of the summed terms.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nilm/kernels.hpp"

namespace nilm::kernels {
namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo = -2.0,
                               double hi = 2.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

const std::vector<std::size_t> kLengths = {0,  1,  2,  3,  4,  5,  7,  8,  9,   15,  16,
                                           17, 31, 33, 63, 64, 65, 91, 127, 991, 3550};

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!isa_supported(Isa::avx2)) GTEST_SKIP() << "AVX2 not available on this CPU";
  }
  const KernelTable& ref = table(Isa::scalar);
  const KernelTable& simd() { return table(Isa::avx2); }
};

TEST_F(KernelEquivalence, Dot) {
  std::mt19937_64 rng(1);
  for (std::size_t n : kLengths) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    EXPECT_NEAR(ref.dot(a.data(), b.data(), n), simd().dot(a.data(), b.data(), n),
                1e-15 * (mag + 1.0) * 4)
        << "n=" << n;
  }
}

TEST_F(KernelEquivalence, Dot4) {
  std::mt19937_64 rng(2);
  for (std::size_t n : kLengths) {
    auto w = random_vec(rng, n);
    std::vector<std::vector<double>> x;
    for (int k = 0; k < 4; ++k) x.push_back(random_vec(rng, n));
    double r[4], s[4];
    ref.dot4(w.data(), x[0].data(), x[1].data(), x[2].data(), x[3].data(), n, r);
    simd().dot4(w.data(), x[0].data(), x[1].data(), x[2].data(), x[3].data(), n, s);
    for (int k = 0; k < 4; ++k) {
      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(w[i] * x[k][i]);
      EXPECT_NEAR(r[k], s[k], 4e-15 * (mag + 1.0)) << "n=" << n << " k=" << k;
      // dot4 is four dots sharing one operand.
      EXPECT_NEAR(r[k], ref.dot(w.data(), x[k].data(), n), 4e-15 * (mag + 1.0));
    }
  }
}

TEST_F(KernelEquivalence, Axpy) {
  std::mt19937_64 rng(3);
  for (std::size_t n : kLengths) {
    auto x = random_vec(rng, n), y = random_vec(rng, n);
    auto y1 = y, y2 = y;
    ref.axpy(0.37, x.data(), y1.data(), n);
    simd().axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(y1[i], y2[i], 2e-16 * (std::abs(y[i]) + std::abs(0.37 * x[i])) * 2);
    }
  }
}

TEST_F(KernelEquivalence, Axpy4) {
  std::mt19937_64 rng(4);
  const double a[4] = {0.5, -1.25, 2.0, 0.001};
  for (std::size_t n : kLengths) {
    std::vector<std::vector<double>> x;
    for (int k = 0; k < 4; ++k) x.push_back(random_vec(rng, n));
    auto y = random_vec(rng, n);
    auto y1 = y, y2 = y;
    ref.axpy4(a, x[0].data(), x[1].data(), x[2].data(), x[3].data(), y1.data(), n);
    simd().axpy4(a, x[0].data(), x[1].data(), x[2].data(), x[3].data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14);
  }
}

TEST_F(KernelEquivalence, ReluAndMaskAreExact) {
  std::mt19937_64 rng(5);
  for (std::size_t n : kLengths) {
    auto x = random_vec(rng, n);
    if (n > 2) x[1] = 0.0, x[2] = -0.0;
    auto r = x, s = x;
    ref.relu(r.data(), n);
    simd().relu(s.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(std::signbit(r[i]), std::signbit(s[i]));
      EXPECT_EQ(r[i], s[i]);
      EXPECT_GE(r[i], 0.0);
    }
    auto g = random_vec(rng, n);
    auto g1 = g, g2 = g;
    ref.relu_mask(x.data(), g1.data(), n);
    simd().relu_mask(x.data(), g2.data(), n);
    EXPECT_EQ(g1, g2);
  }
}

TEST_F(KernelEquivalence, Adam) {
  std::mt19937_64 rng(6);
  const AdamParams p{0.001, 0.9, 0.999, 1e-8, 1.0 - 0.9 * 0.9, 1.0 - 0.999 * 0.999};
  for (std::size_t n : kLengths) {
    auto w = random_vec(rng, n), g = random_vec(rng, n);
    auto m = random_vec(rng, n, -0.1, 0.1), v = random_vec(rng, n, 0.0, 0.1);
    auto w1 = w, m1 = m, v1 = v, w2 = w, m2 = m, v2 = v;
    ref.adam(w1.data(), m1.data(), v1.data(), g.data(), n, p);
    simd().adam(w2.data(), m2.data(), v2.data(), g.data(), n, p);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(m1[i], m2[i], 1e-15);
      EXPECT_NEAR(v1[i], v2[i], 1e-15);
      EXPECT_NEAR(w1[i], w2[i], 1e-13);
    }
  }
}

TEST_F(KernelEquivalence, GemmAgainstNaiveTripleLoop) {
  std::mt19937_64 rng(7);
  struct Shape { std::size_t m, n, k; };
  // odd sizes hit every row and column tail; k > 256 crosses a depth block
  const std::vector<Shape> shapes = {{1, 1, 1},   {1, 8, 3},    {5, 7, 2},   {6, 8, 9},
                                     {7, 13, 17}, {13, 21, 300}, {50, 75, 250}, {3, 4, 513},
                                     {0, 5, 5},   {5, 0, 5},    {4, 5, 0}};
  for (const auto& sh : shapes) {
    const std::size_t lda = sh.k + 3, ldb = sh.n + 2, ldc = sh.n + 1;
    auto a = random_vec(rng, sh.m * lda + 1), b = random_vec(rng, sh.k * ldb + 1);
    auto c0 = random_vec(rng, sh.m * ldc + 1);
    auto expect = c0;
    std::vector<double> mag(c0.size(), 0.0);
    for (std::size_t i = 0; i < sh.m; ++i)
      for (std::size_t j = 0; j < sh.n; ++j) {
        long double s = c0[i * ldc + j];
        for (std::size_t p = 0; p < sh.k; ++p) {
          s += static_cast<long double>(a[i * lda + p]) * b[p * ldb + j];
          mag[i * ldc + j] += std::abs(a[i * lda + p] * b[p * ldb + j]);
        }
        expect[i * ldc + j] = static_cast<double>(s);
      }
    for (const KernelTable* t : {&ref, &simd()}) {
      auto c = c0;
      t->gemm(sh.m, sh.n, sh.k, a.data(), lda, b.data(), ldb, c.data(), ldc);
      for (std::size_t i = 0; i < c.size(); ++i)
        ASSERT_NEAR(c[i], expect[i], 4e-16 * (sh.k + 1) * (mag[i] + std::abs(c0[i])) + 1e-300)
            << sh.m << "x" << sh.n << "x" << sh.k << " at " << i;
    }
  }
}

TEST(KernelDispatch, ScalarAlwaysAvailableAndSelectable) {
  EXPECT_TRUE(isa_supported(Isa::scalar));
  const Isa before = active_isa();
  set_active_isa(Isa::scalar);
  EXPECT_EQ(active_isa(), Isa::scalar);
  const double a[3] = {1, 2, 3}, b[3] = {4, 5, 6};
  EXPECT_EQ(dot(a, b, 3), 32.0);
  set_active_isa(before);
  EXPECT_EQ(active_isa(), before);
  EXPECT_EQ(isa_name(Isa::avx2), "avx2");
}

}  // namespace
}  // namespace nilm::kernels
