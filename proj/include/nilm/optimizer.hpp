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

#include <cstdint>
#include <string_view>
#include <vector>

#include "nilm/network.hpp"

namespace nilm {

enum class OptimizerKind { sgd, adam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const OptimizerConfig&) const = default;
};

// First/second moment accumulators, index-aligned with the network's layers.
// Empty for SGD and for parameter-free layers.
struct MomentSlots {
  Tensor m_weight, v_weight, m_bias, v_bias;
};

/// Plain SGD (w <- w - lr * g) or bias-corrected Adam.
///
/// Frozen layers are skipped entirely: their parameters and moment slots are
/// left untouched. The step counter advances once per call.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerConfig config, const Network& net);

  void step(Network& net, const Gradients& grads);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }
  std::vector<MomentSlots>& slots() noexcept { return slots_; }
  const std::vector<MomentSlots>& slots() const noexcept { return slots_; }

  void set_learning_rate(double lr);
  // Used when loading a checkpoint.
  void restore(std::uint64_t steps, std::vector<MomentSlots> slots);
  // Zeroes the moments of one layer (e.g. after re-initializing it).
  void reset_slots(std::size_t layer_index);

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<MomentSlots> slots_;
};

}  // namespace nilm
