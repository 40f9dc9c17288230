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

#include "nilm/optimizer.hpp"

#include <cmath>
#include <string>

#include "nilm/error.hpp"
#include "nilm/kernels.hpp"

namespace nilm {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

Optimizer::Optimizer(OptimizerConfig config, const Network& net) : config_(config) {
  set_learning_rate(config.learning_rate);
  slots_.resize(net.layers().size());
  if (config_.kind == OptimizerKind::adam) {
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      const Layer& l = net.layers()[i];
      if (!l.has_params()) continue;
      slots_[i].m_weight = Tensor(l.weight.shape());
      slots_[i].v_weight = Tensor(l.weight.shape());
      slots_[i].m_bias = Tensor(l.bias.shape());
      slots_[i].v_bias = Tensor(l.bias.shape());
    }
  }
}

void Optimizer::set_learning_rate(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ConfigError("learning rate must be positive, got " + std::to_string(lr));
  }
  config_.learning_rate = lr;
}

void Optimizer::restore(std::uint64_t steps, std::vector<MomentSlots> slots) {
  steps_ = steps;
  slots_ = std::move(slots);
}

void Optimizer::reset_slots(std::size_t layer_index) {
  auto& s = slots_.at(layer_index);
  for (Tensor* t : {&s.m_weight, &s.v_weight, &s.m_bias, &s.v_bias}) t->fill(0.0);
}

void Optimizer::step(Network& net, const Gradients& grads) {
  auto& layers = net.layers();
  if (grads.size() != layers.size()) {
    throw ShapeError("gradient list has " + std::to_string(grads.size()) + " entries for " +
                     std::to_string(layers.size()) + " layers");
  }
  if (slots_.size() != layers.size()) {
    throw ShapeError("optimizer was built for a different network");
  }
  ++steps_;
  const auto& kt = kernels::active();
  kernels::AdamParams ap{};
  if (config_.kind == OptimizerKind::adam) {
    const double t = static_cast<double>(steps_);
    ap = {config_.learning_rate, config_.beta1,
          config_.beta2,         config_.epsilon,
          1.0 - std::pow(config_.beta1, t), 1.0 - std::pow(config_.beta2, t)};
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer& l = layers[i];
    if (!l.has_params() || !l.trainable) continue;
    const ParamGrad& g = grads[i];
    if (g.weight.shape() != l.weight.shape() || g.bias.shape() != l.bias.shape()) {
      throw ShapeError("gradient for layer '" + l.name + "' has the wrong shape");
    }
    require_finite(g.weight.values(), "weight gradient");
    require_finite(g.bias.values(), "bias gradient");
    if (config_.kind == OptimizerKind::sgd) {
      const double a = -config_.learning_rate;
      kt.axpy(a, g.weight.data(), l.weight.data(), l.weight.size());
      kt.axpy(a, g.bias.data(), l.bias.data(), l.bias.size());
    } else {
      MomentSlots& s = slots_[i];
      kt.adam(l.weight.data(), s.m_weight.data(), s.v_weight.data(), g.weight.data(),
              l.weight.size(), ap);
      kt.adam(l.bias.data(), s.m_bias.data(), s.v_bias.data(), g.bias.data(), l.bias.size(), ap);
    }
  }
}

}  // namespace nilm
