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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "nilm/tensor.hpp"

namespace nilm {

struct WindowConfig {
  std::size_t start = 0;      // S
  std::size_t length = 1000;  // L = E - S
  std::size_t budget = 20000; // B
  std::size_t offset = 35;

  std::size_t end() const { return start + length; }
  bool operator==(const WindowConfig&) const = default;
};

void validate(const WindowConfig& config);

struct WindowBatch {
  Tensor inputs;   // [rows, L]
  Tensor targets;  // [rows, 3]: first, mid, last
  std::vector<std::size_t> starts;

  std::size_t rows() const { return starts.size(); }
};

/// floor((L - 1) / 2)
std::size_t mid_index(std::size_t length);

/// Index of each target slot inside a window of `length`.
std::array<std::size_t, 3> target_offsets(std::size_t length);

std::array<double, 3> extract_targets(std::span<const double> window, std::size_t length);

/// min(B, floor((n - S - L) / offset) + 1); 0 when the data is too short.
std::size_t window_count(std::size_t n, const WindowConfig& config);

/// Slices aggregate[S : S+L] for S = start, start+offset, ... until the budget
/// or the data runs out. Throws DataError when fewer than L samples remain.
WindowBatch build_windows(std::span<const double> aggregate, std::span<const double> appliance,
                          const WindowConfig& config);

/// Inputs only, for inference.
Tensor build_input_windows(std::span<const double> aggregate, const WindowConfig& config,
                           std::vector<std::size_t>* starts = nullptr);

// ---- on-disk cache ----------------------------------------------------------

/// FNV-1a over the config fields and both series.
std::uint64_t window_cache_key(const WindowConfig& config, std::span<const double> aggregate,
                               std::span<const double> appliance);

void write_window_cache(const WindowBatch& batch, std::uint64_t key,
                        const std::filesystem::path& file);

/// nullopt when the file is missing or was built under a different key.
std::optional<WindowBatch> read_window_cache(const std::filesystem::path& file, std::uint64_t key);

}  // namespace nilm
