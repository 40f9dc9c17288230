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

#include "nilm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "nilm/error.hpp"

namespace nilm {

namespace {
constexpr double kKinkGap = 1e-5;
}  // namespace

GradCheckResult finite_difference_check(const Network& network, const Tensor& input,
                                        const Tensor& targets, LossKind loss, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    throw ConfigError("finite-difference epsilon must lie in [1e-6, 1e-3]");
  }
  ForwardTrace trace;
  const Tensor out = network.forward(input, trace);
  const LossResult base = loss_eval(loss, out, targets);
  const Gradients analytic = network.backward(trace, base.grad);

  Network probe = network;
  auto loss_at = [&]() { return loss_eval(loss, probe.forward(input), targets).value; };

  GradCheckResult result;
  for (std::size_t li = 0; li < probe.layers().size(); ++li) {
    Layer& l = probe.layers()[li];
    if (!l.has_params() || !l.trainable) continue;
    const struct {
      Tensor* param;
      const Tensor* grad;
      const char* tag;
    } groups[] = {{&l.weight, &analytic[li].weight, "weight"},
                  {&l.bias, &analytic[li].bias, "bias"}};
    for (const auto& grp : groups) {
      for (std::size_t i = 0; i < grp.param->size(); ++i) {
        double& p = (*grp.param)[i];
        const double saved = p;
        p = saved + epsilon;
        const double up = loss_at();
        p = saved - epsilon;
        const double down = loss_at();
        p = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = (*grp.grad)[i];
        const double scale = std::max(1.0, std::abs(a));
        double d = std::abs(a - numeric) / scale;
        // A ReLU or max-pool switch inside [p - eps, p + eps]: the two slopes
        // disagree and backprop returns one of them.
        const double right = (up - base.value) / epsilon, left = (base.value - down) / epsilon;
        if (std::abs(right - left) > kKinkGap * scale) {
          ++result.kinks;
          d = std::min({d, std::abs(a - right) / scale, std::abs(a - left) / scale});
        }
        ++result.checked;
        if (d > result.max_discrepancy || result.worst.empty()) {
          result.max_discrepancy = std::max(d, result.max_discrepancy);
          result.worst = l.name + "." + grp.tag + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return result;
}

}  // namespace nilm
