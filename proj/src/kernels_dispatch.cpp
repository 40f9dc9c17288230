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

#include <atomic>

#include "kernels_impl.hpp"
#include "nilm/error.hpp"

namespace nilm::kernels {

namespace {

constexpr KernelTable kScalar{scalar::dot,  scalar::dot4,      scalar::axpy, scalar::axpy4,
                              scalar::relu, scalar::relu_mask, scalar::adam,
                              scalar::gemm};

#if defined(NILM_HAVE_AVX2)
constexpr KernelTable kAvx2{avx2::dot,  avx2::dot4,      avx2::axpy, avx2::axpy4,
                            avx2::relu, avx2::relu_mask, avx2::adam,
                            avx2::gemm};
#endif

struct Selection {
  std::atomic<Isa> isa;
  std::atomic<const KernelTable*> table;
};

Selection& selected();

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(NILM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error("kernel ISA '" + std::string(isa_name(isa)) + "' is not supported on this CPU");
  }
#if defined(NILM_HAVE_AVX2)
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

namespace {

Selection& selected() {
  static Selection s{best_isa(), &table(best_isa())};
  return s;
}

}  // namespace

const KernelTable& active() { return *selected().table.load(std::memory_order_relaxed); }

Isa active_isa() { return selected().isa.load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  const KernelTable* t = &table(isa);
  selected().isa.store(isa, std::memory_order_relaxed);
  selected().table.store(t, std::memory_order_relaxed);
}

}  // namespace nilm::kernels
