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

#pragma once

// Numerical inner loops shared by the network engine and the transforms.
//
// Each kernel has a scalar reference implementation and an AVX2+FMA variant.
// The variant is picked once at startup from CPUID and can be overridden
// (tests pin both and compare them). All kernels operate on raw contiguous
// double ranges; callers own bounds checking.

#include <cstddef>
#include <string_view>

namespace nilm::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct AdamParams {
  double lr;
  double beta1;
  double beta2;
  double eps;
  // 1 - beta^t for the current step t.
  double bias1;
  double bias2;
};

struct KernelTable {
  // sum a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[k] = sum w[i] * xk[i] for k in 0..3; reads `w` once.
  void (*dot4)(const double* w, const double* x0, const double* x1, const double* x2,
               const double* x3, std::size_t n, double* out);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] += a[0]*x0[i] + a[1]*x1[i] + a[2]*x2[i] + a[3]*x3[i]
  void (*axpy4)(const double* a, const double* x0, const double* x1, const double* x2,
                const double* x3, double* y, std::size_t n);
  // x[i] = max(x[i], 0)
  void (*relu)(double* x, std::size_t n);
  // g[i] = y[i] > 0 ? g[i] : 0
  void (*relu_mask)(const double* y, double* g, std::size_t n);
  // Bias-corrected Adam update of w with moments m, v and gradient g.
  void (*adam)(double* w, double* m, double* v, const double* g, std::size_t n,
               const AdamParams& p);
  // C[m x n] += A[m x k] * B[k x n], row-major with leading dimensions.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc);
};

bool isa_supported(Isa isa);
Isa best_isa();

// Kernel table for a specific ISA; throws nilm::Error if unsupported here.
const KernelTable& table(Isa isa);

// Currently selected table. Defaults to best_isa().
const KernelTable& active();
Isa active_isa();
void set_active_isa(Isa isa);

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}

}  // namespace nilm::kernels
