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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "nilm/state.hpp"

namespace nilm {

struct FitConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;  // drives the per-epoch shuffle
  bool shuffle = true;
};

// Mean batch loss per epoch, weighted by batch size.
struct FitResult {
  std::vector<double> epoch_loss;
};

/// Seeded permutation of [0, n).
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

/// Rows `idx` of `t` along axis 0.
Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end);

/// Mini-batch training. `targets` is row-aligned with `inputs` (class
/// indices [N] for cross-entropy, or [N, k]). The callback, if set, runs after
/// each epoch with the epoch index and its mean loss.
///
/// A non-finite batch loss aborts with DataError naming the epoch, batch and
/// parameter norm.
FitResult fit(NetworkState& state, const Tensor& inputs, const Tensor& targets,
              const FitConfig& config,
              const std::function<void(std::size_t, double)>& on_epoch = {});

/// Forward pass in chunks of `batch_size` rows.
Tensor predict(const Network& net, const Tensor& inputs, std::size_t batch_size = 256);

/// L2 norm over every parameter.
double parameter_norm(const Network& net);

}  // namespace nilm
