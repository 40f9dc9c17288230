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

#include "nilm/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "nilm/error.hpp"

namespace nilm {

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
  Shape shape = t.shape();
  const std::size_t stride = t.size() / shape[0];
  shape[0] = end - begin;
  Tensor out(shape);
  for (std::size_t r = begin; r < end; ++r) {
    std::memcpy(out.data() + (r - begin) * stride, t.data() + idx[r] * stride,
                stride * sizeof(double));
  }
  return out;
}

double parameter_norm(const Network& net) {
  double s = 0.0;
  for (const auto& l : net.layers()) {
    for (double w : l.weight.values()) s += w * w;
    for (double b : l.bias.values()) s += b * b;
  }
  return std::sqrt(s);
}

FitResult fit(NetworkState& state, const Tensor& inputs, const Tensor& targets,
              const FitConfig& config, const std::function<void(std::size_t, double)>& on_epoch) {
  if (inputs.empty() || targets.empty()) throw DataError("training set is empty");
  const std::size_t n = inputs.dim(0);
  if (targets.dim(0) != n) {
    throw ShapeError("targets have " + std::to_string(targets.dim(0)) + " rows, inputs have " +
                     std::to_string(n));
  }
  if (config.batch_size == 0) throw ConfigError("batch size must be >= 1");
  FitResult result;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) order = shuffled_order(n, config.seed + 0x9E3779B97F4A7C15ull * (epoch + 1));
    double total = 0.0;
    for (std::size_t b = 0, batch = 0; b < n; b += config.batch_size, ++batch) {
      const std::size_t e = std::min(n, b + config.batch_size);
      const Tensor x = gather_rows(inputs, order, b, e);
      const Tensor y = gather_rows(targets, order, b, e);
      double loss = 0.0;
      try {
        loss = train_step(state, x, y);
      } catch (const DataError& err) {
        throw DataError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batch) + " (parameter norm " +
                        std::to_string(parameter_norm(state.network)) + "): " + err.what());
      }
      total += loss * static_cast<double>(e - b);
    }
    result.epoch_loss.push_back(total / static_cast<double>(n));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }
  return result;
}

Tensor predict(const Network& net, const Tensor& inputs, std::size_t batch_size) {
  const std::size_t n = inputs.dim(0);
  if (n <= batch_size) return net.forward(inputs);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Tensor out;
  std::size_t width = 0;
  for (std::size_t b = 0; b < n; b += batch_size) {
    const std::size_t e = std::min(n, b + batch_size);
    Tensor y = net.forward(gather_rows(inputs, idx, b, e));
    if (out.empty()) {
      Shape s = y.shape();
      width = y.size() / s[0];
      s[0] = n;
      out = Tensor(s);
    }
    std::memcpy(out.data() + b * width, y.data(), y.size() * sizeof(double));
  }
  return out;
}

}  // namespace nilm
