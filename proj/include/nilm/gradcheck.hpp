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
#include <string>

#include "nilm/loss.hpp"
#include "nilm/network.hpp"

namespace nilm {

struct GradCheckResult {
  // max over checked parameters of |analytic - numeric| / max(1, |analytic|)
  double max_discrepancy = 0.0;
  std::size_t checked = 0;
  // parameters whose left and right difference quotients disagree; these are
  // compared against the one-sided quotients instead of the central one
  std::size_t kinks = 0;
  // "<layer>.weight[i]" of the worst parameter, for diagnostics.
  std::string worst;
};

/// Compares back-propagated gradients against central differences with step
/// `epsilon` for every trainable parameter. Frozen layers are skipped.
/// Throws ConfigError unless epsilon lies in [1e-6, 1e-3].
GradCheckResult finite_difference_check(const Network& network, const Tensor& input,
                                        const Tensor& targets, LossKind loss,
                                        double epsilon = 1e-6);

}  // namespace nilm
