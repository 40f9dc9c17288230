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

#include "nilm/kernels.hpp"

namespace nilm::kernels {

#define NILM_DECLARE_KERNELS                                                              \
  double dot(const double* a, const double* b, std::size_t n);                            \
  void dot4(const double* w, const double* x0, const double* x1, const double* x2,        \
            const double* x3, std::size_t n, double* out);                                \
  void axpy(double a, const double* x, double* y, std::size_t n);                         \
  void axpy4(const double* a, const double* x0, const double* x1, const double* x2,       \
             const double* x3, double* y, std::size_t n);                                 \
  void relu(double* x, std::size_t n);                                                    \
  void relu_mask(const double* y, double* g, std::size_t n);                              \
  void adam(double* w, double* m, double* v, const double* g, std::size_t n,              \
            const AdamParams& p);                                                         \
  void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, \
            const double* b, std::size_t ldb, double* c, std::size_t ldc);

namespace scalar {
NILM_DECLARE_KERNELS
}

#if defined(NILM_HAVE_AVX2)
namespace avx2 {
NILM_DECLARE_KERNELS
}
#endif

#undef NILM_DECLARE_KERNELS

}  // namespace nilm::kernels
