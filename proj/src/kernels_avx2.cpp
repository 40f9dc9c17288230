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

// Built with -mavx2 -mfma. Only reached through the dispatch table after a
// CPUID check, so nothing here may be called on a machine without AVX2.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "kernels_impl.hpp"

namespace nilm::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot4(const double* w, const double* x0, const double* x1, const double* x2,
          const double* x3, std::size_t n, double* out) {
  __m256d a0 = _mm256_setzero_pd(), b0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd(), b1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), b2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd(), b3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d wa = _mm256_loadu_pd(w + i);
    const __m256d wb = _mm256_loadu_pd(w + i + 4);
    a0 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x0 + i), a0);
    b0 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x0 + i + 4), b0);
    a1 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x1 + i), a1);
    b1 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x1 + i + 4), b1);
    a2 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x2 + i), a2);
    b2 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x2 + i + 4), b2);
    a3 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x3 + i), a3);
    b3 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x3 + i + 4), b3);
  }
  double s0 = hsum(_mm256_add_pd(a0, b0));
  double s1 = hsum(_mm256_add_pd(a1, b1));
  double s2 = hsum(_mm256_add_pd(a2, b2));
  double s3 = hsum(_mm256_add_pd(a3, b3));
  for (; i < n; ++i) {
    const double wi = w[i];
    s0 += wi * x0[i];
    s1 += wi * x1[i];
    s2 += wi * x2[i];
    s3 += wi * x3[i];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    const __m256d y1 =
        _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy4(const double* a, const double* x0, const double* x1, const double* x2,
           const double* x3, double* y, std::size_t n) {
  const __m256d c0 = _mm256_set1_pd(a[0]);
  const __m256d c1 = _mm256_set1_pd(a[1]);
  const __m256d c2 = _mm256_set1_pd(a[2]);
  const __m256d c3 = _mm256_set1_pd(a[3]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(y + i);
    v = _mm256_fmadd_pd(c0, _mm256_loadu_pd(x0 + i), v);
    v = _mm256_fmadd_pd(c1, _mm256_loadu_pd(x1 + i), v);
    v = _mm256_fmadd_pd(c2, _mm256_loadu_pd(x2 + i), v);
    v = _mm256_fmadd_pd(c3, _mm256_loadu_pd(x3 + i), v);
    _mm256_storeu_pd(y + i, v);
  }
  for (; i < n; ++i) {
    double v = y[i];
    v += a[0] * x0[i];
    v += a[1] * x1[i];
    v += a[2] * x2[i];
    v += a[3] * x3[i];
    y[i] = v;
  }
}

void relu(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // max_pd returns the second operand on NaN, matching the scalar x < 0 test.
    _mm256_storeu_pd(x + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] = x[i] < 0.0 ? 0.0 : x[i];
}

void relu_mask(const double* y, double* g, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(g + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
  }
  for (; i < n; ++i) g[i] = y[i] > 0.0 ? g[i] : 0.0;
}

void adam(double* w, double* m, double* v, const double* g, std::size_t n,
          const AdamParams& p) {
  const __m256d beta1 = _mm256_set1_pd(p.beta1);
  const __m256d beta2 = _mm256_set1_pd(p.beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - p.beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - p.beta2);
  const __m256d bias1 = _mm256_set1_pd(p.bias1);
  const __m256d bias2 = _mm256_set1_pd(p.bias2);
  const __m256d lr = _mm256_set1_pd(p.lr);
  const __m256d eps = _mm256_set1_pd(p.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi =
        _mm256_add_pd(_mm256_mul_pd(beta1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(beta2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bias1);
    const __m256d vhat = _mm256_div_pd(vi, bias2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), eps));
    _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), step));
  }
  const double k1 = 1.0 - p.beta1;
  const double k2 = 1.0 - p.beta2;
  for (; i < n; ++i) {
    m[i] = p.beta1 * m[i] + k1 * g[i];
    v[i] = p.beta2 * v[i] + k2 * (g[i] * g[i]);
    w[i] -= p.lr * (m[i] / p.bias1) / (std::sqrt(v[i] / p.bias2) + p.eps);
  }
}

namespace {

constexpr std::size_t kDepthBlock = 256;

// R rows by 8 columns of C, accumulated in registers over k.
template <int R>
inline void block8(std::size_t k, const double* a, std::size_t lda, const double* b,
                   std::size_t ldb, double* c, std::size_t ldc) {
  __m256d lo[R], hi[R];
  for (int r = 0; r < R; ++r) {
    lo[r] = _mm256_loadu_pd(c + r * ldc);
    hi[r] = _mm256_loadu_pd(c + r * ldc + 4);
  }
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    for (int r = 0; r < R; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * lda + p);
      lo[r] = _mm256_fmadd_pd(av, b0, lo[r]);
      hi[r] = _mm256_fmadd_pd(av, b1, hi[r]);
    }
  }
  for (int r = 0; r < R; ++r) {
    _mm256_storeu_pd(c + r * ldc, lo[r]);
    _mm256_storeu_pd(c + r * ldc + 4, hi[r]);
  }
}

template <int R>
inline void block4(std::size_t k, const double* a, std::size_t lda, const double* b,
                   std::size_t ldb, double* c, std::size_t ldc) {
  __m256d acc[R];
  for (int r = 0; r < R; ++r) acc[r] = _mm256_loadu_pd(c + r * ldc);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    for (int r = 0; r < R; ++r) acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * lda + p), b0, acc[r]);
  }
  for (int r = 0; r < R; ++r) _mm256_storeu_pd(c + r * ldc, acc[r]);
}

// Columns [j0, n) that do not fill a full 8-wide panel.
template <int R>
void tail_columns(std::size_t j0, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t j = j0;
  for (; j + 4 <= n; j += 4) block4<R>(k, a, lda, b + j, ldb, c + j, ldc);
  for (; j < n; ++j) {
    for (int r = 0; r < R; ++r) {
      double s = c[r * ldc + j];
      for (std::size_t p = 0; p < k; ++p) s = std::fma(a[r * lda + p], b[p * ldb + j], s);
      c[r * ldc + j] = s;
    }
  }
}

template <typename F>
void for_row_blocks(std::size_t m, F&& f) {
  std::size_t i = 0;
  for (; i + 6 <= m; i += 6) f(std::integral_constant<int, 6>{}, i);
  switch (m - i) {
    case 5: f(std::integral_constant<int, 5>{}, i); break;
    case 4: f(std::integral_constant<int, 4>{}, i); break;
    case 3: f(std::integral_constant<int, 3>{}, i); break;
    case 2: f(std::integral_constant<int, 2>{}, i); break;
    case 1: f(std::integral_constant<int, 1>{}, i); break;
    default: break;
  }
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  alignas(32) double panel[kDepthBlock * 8];
  const std::size_t full = n / 8 * 8;
  for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
    const std::size_t kc = std::min(kDepthBlock, k - p0);
    const double* ap = a + p0;
    const double* bp = b + p0 * ldb;
    for (std::size_t j = 0; j < full; j += 8) {
      for (std::size_t p = 0; p < kc; ++p) {
        _mm256_store_pd(panel + p * 8, _mm256_loadu_pd(bp + p * ldb + j));
        _mm256_store_pd(panel + p * 8 + 4, _mm256_loadu_pd(bp + p * ldb + j + 4));
      }
      for_row_blocks(m, [&](auto rows, std::size_t i) {
        block8<decltype(rows)::value>(kc, ap + i * lda, lda, panel, 8, c + i * ldc + j, ldc);
      });
    }
    if (full < n) {
      for_row_blocks(m, [&](auto rows, std::size_t i) {
        tail_columns<decltype(rows)::value>(full, n, kc, ap + i * lda, lda, bp, ldb, c + i * ldc, ldc);
      });
    }
  }
}

}  // namespace nilm::kernels::avx2
