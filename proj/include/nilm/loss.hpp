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

#include <string_view>

#include "nilm/tensor.hpp"

namespace nilm {

enum class LossKind { mse, cross_entropy };

std::string_view loss_name(LossKind kind);
LossKind parse_loss(std::string_view name);

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d loss / d predictions
};

/// mse: mean over all elements of (pred - target)^2.
/// cross_entropy: mean over rows of -sum_k target_k * log(pred_k), where
/// `predictions` are softmax rows and `targets` are either one-hot/probability
/// rows of the same shape or a [batch] tensor of class indices.
///
/// Throws DataError on non-finite inputs or probability rows that do not sum
/// to 1 within 1e-9, ShapeError on mismatched shapes.
LossResult loss_eval(LossKind kind, const Tensor& predictions, const Tensor& targets);

}  // namespace nilm
