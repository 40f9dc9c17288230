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

#include "nilm/windowing.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "nilm/error.hpp"

namespace nilm {

void validate(const WindowConfig& c) {
  if (c.length < 1) throw ConfigError("window length must be >= 1");
  if (c.offset < 1) throw ConfigError("window offset must be >= 1");
  if (c.budget < 1) throw ConfigError("window budget must be >= 1");
}

std::size_t mid_index(std::size_t length) { return length == 0 ? 0 : (length - 1) / 2; }

std::array<std::size_t, 3> target_offsets(std::size_t length) {
  return {0, mid_index(length), length - 1};
}

std::array<double, 3> extract_targets(std::span<const double> window, std::size_t length) {
  if (length == 0 || window.size() != length) {
    throw ShapeError("target window has " + std::to_string(window.size()) +
                     " samples, expected " + std::to_string(length));
  }
  return {window[0], window[mid_index(length)], window[length - 1]};
}

std::size_t window_count(std::size_t n, const WindowConfig& c) {
  validate(c);
  if (n < c.end()) return 0;
  return std::min(c.budget, (n - c.end()) / c.offset + 1);
}

Tensor build_input_windows(std::span<const double> aggregate, const WindowConfig& config,
                           std::vector<std::size_t>* starts) {
  const std::size_t rows = window_count(aggregate.size(), config);
  if (rows == 0) {
    throw DataError("series of " + std::to_string(aggregate.size()) +
                    " samples is shorter than one window (start " + std::to_string(config.start) +
                    ", length " + std::to_string(config.length) + ")");
  }
  const std::size_t L = config.length;
  Tensor x(Shape{rows, L});
  if (starts) starts->resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t s = config.start + r * config.offset;
    std::memcpy(x.data() + r * L, aggregate.data() + s, L * sizeof(double));
    if (starts) (*starts)[r] = s;
  }
  return x;
}

WindowBatch build_windows(std::span<const double> aggregate, std::span<const double> appliance,
                          const WindowConfig& config) {
  if (aggregate.size() != appliance.size()) {
    throw ShapeError("aggregate and appliance series differ in length");
  }
  WindowBatch b;
  b.inputs = build_input_windows(aggregate, config, &b.starts);
  b.targets = Tensor(Shape{b.rows(), 3});
  for (std::size_t r = 0; r < b.rows(); ++r) {
    const auto t = extract_targets(appliance.subspan(b.starts[r], config.length), config.length);
    for (std::size_t k = 0; k < 3; ++k) b.targets.at(r, k) = t[k];
  }
  return b;
}

// ---- cache --------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'N', 'I', 'L', 'M', 'W', 'I', 'N', '1'};

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ull;
  void add(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  }
  void add_u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    add(b, 8);
  }
  void add_series(std::span<const double> s) {
    add_u64(s.size());
    for (double v : s) add_u64(std::bit_cast<std::uint64_t>(v));
  }
};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

}  // namespace

std::uint64_t window_cache_key(const WindowConfig& c, std::span<const double> aggregate,
                               std::span<const double> appliance) {
  Fnv f;
  for (std::uint64_t v : {c.start, c.length, c.budget, c.offset}) f.add_u64(v);
  f.add_series(aggregate);
  f.add_series(appliance);
  return f.h;
}

void write_window_cache(const WindowBatch& batch, std::uint64_t key,
                        const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out.write(kMagic, 8);
  put_u64(out, key);
  put_u64(out, batch.rows());
  put_u64(out, batch.rows() ? batch.inputs.dim(1) : 0);
  for (auto s : batch.starts) put_u64(out, s);
  for (double v : batch.inputs.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  for (double v : batch.targets.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw DataError("write failed for " + file.string());
}

std::optional<WindowBatch> read_window_cache(const std::filesystem::path& file, std::uint64_t key) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint64_t stored = 0, rows = 0, len = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(file.string() + " is not a window cache");
  }
  if (!get_u64(in, stored) || stored != key) return std::nullopt;
  if (!get_u64(in, rows) || !get_u64(in, len) || rows == 0 || len == 0) {
    throw DataError(file.string() + ": corrupt window cache header");
  }
  WindowBatch b;
  b.starts.resize(rows);
  b.inputs = Tensor(Shape{rows, len});
  b.targets = Tensor(Shape{rows, 3});
  std::uint64_t v = 0;
  for (auto& s : b.starts) {
    if (!get_u64(in, v)) throw DataError(file.string() + ": truncated window cache");
    s = v;
  }
  for (Tensor* t : {&b.inputs, &b.targets}) {
    for (auto& x : t->storage()) {
      if (!get_u64(in, v)) throw DataError(file.string() + ": truncated window cache");
      x = std::bit_cast<double>(v);
    }
  }
  return b;
}

}  // namespace nilm
