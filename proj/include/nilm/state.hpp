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
#include <filesystem>
#include <string>

#include "nilm/loss.hpp"
#include "nilm/network.hpp"
#include "nilm/optimizer.hpp"

namespace nilm {

/// Everything needed to resume or reproduce training: the layers with their
/// parameters and trainable flags, optimizer slots, loss and the seed.
struct NetworkState {
  Network network;
  Optimizer optimizer;
  LossKind loss = LossKind::mse;
  std::uint64_t seed = 0;
};

// Forward, loss, backward and one optimizer step. Returns the batch loss.
// Throws DataError when the loss is not finite.
double train_step(NetworkState& state, const Tensor& inputs, const Tensor& targets);

// Applies set_trainable to the network; see Network::set_trainable.
std::size_t set_trainable(NetworkState& state, std::string_view selector, bool trainable);

// Versioned little-endian binary container. Identical states produce
// identical bytes.
void save_checkpoint(const NetworkState& state, const std::filesystem::path& path);
NetworkState load_checkpoint(const std::filesystem::path& path);
std::string serialize_state(const NetworkState& state);
NetworkState deserialize_state(const std::string& bytes);

}  // namespace nilm
