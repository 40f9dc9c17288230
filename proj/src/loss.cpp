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

#include "nilm/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nilm/error.hpp"

namespace nilm {

std::string_view loss_name(LossKind kind) {
  return kind == LossKind::mse ? "mse" : "cross_entropy";
}

LossKind parse_loss(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

namespace {

constexpr double kProbFloor = 1e-300;

LossResult mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("mse: prediction shape " + shape_to_string(pred.shape()) +
                     " differs from target shape " + shape_to_string(target.shape()));
  }
  const double n = static_cast<double>(pred.size());
  LossResult r{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.value += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.value /= n;
  return r;
}

LossResult cross_entropy(const Tensor& pred, const Tensor& target) {
  if (pred.rank() != 2) {
    throw ShapeError("cross_entropy: predictions must be [batch, classes], got " +
                     shape_to_string(pred.shape()));
  }
  const std::size_t B = pred.dim(0), K = pred.dim(1);
  for (std::size_t b = 0; b < B; ++b) {
    double sum = 0.0;
    for (double p : pred.row(b)) {
      if (p < 0.0) throw DataError("cross_entropy: negative probability in row " + std::to_string(b));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw DataError("cross_entropy: row " + std::to_string(b) +
                      " is not a probability distribution (sum " + std::to_string(sum) +
                      "); apply softmax first");
    }
  }

  Tensor dense_target;
  const Tensor* t = &target;
  if (target.rank() == 1) {
    if (target.dim(0) != B) {
      throw ShapeError("cross_entropy: " + std::to_string(target.dim(0)) +
                       " class indices for batch of " + std::to_string(B));
    }
    dense_target = Tensor(Shape{B, K});
    for (std::size_t b = 0; b < B; ++b) {
      const double c = target[b];
      if (c < 0.0 || c != std::floor(c) || c >= static_cast<double>(K)) {
        throw DataError("cross_entropy: class index " + std::to_string(c) + " out of range");
      }
      dense_target.at(b, static_cast<std::size_t>(c)) = 1.0;
    }
    t = &dense_target;
  } else if (target.shape() != pred.shape()) {
    throw ShapeError("cross_entropy: target shape " + shape_to_string(target.shape()) +
                     " does not match predictions " + shape_to_string(pred.shape()));
  }

  LossResult r{0.0, Tensor(pred.shape())};
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double ti = (*t)[i];
    if (ti == 0.0) continue;
    const double p = std::max(pred[i], kProbFloor);
    r.value -= ti * std::log(p);
    r.grad[i] = -ti / p * inv_b;
  }
  r.value *= inv_b;
  // -log(1) is exactly 0; don't report -0.0 for a point mass.
  if (r.value == 0.0) r.value = 0.0;
  return r;
}

}  // namespace

LossResult loss_eval(LossKind kind, const Tensor& predictions, const Tensor& targets) {
  require_finite(predictions.values(), "loss predictions");
  require_finite(targets.values(), "loss targets");
  LossResult r = kind == LossKind::mse ? mse(predictions, targets)
                                       : cross_entropy(predictions, targets);
  if (!std::isfinite(r.value)) throw DataError("loss evaluated to a non-finite value");
  return r;
}

}  // namespace nilm
