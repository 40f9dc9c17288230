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

#include "nilm/network.hpp"

#include <cmath>
#include <random>

#include "nilm/error.hpp"

namespace nilm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct Fans {
  std::size_t in;
  std::size_t out;
};

Fans fans_of(const LayerSpec& spec) {
  return std::visit(Overloaded{
                        [](const ConvLayerSpec& s) {
                          return Fans{s.in_channels * s.kernel_size,
                                      s.out_channels * s.kernel_size};
                        },
                        [](const Conv2dLayerSpec& s) {
                          const std::size_t area = s.kernel_size * s.kernel_size;
                          return Fans{s.in_channels * area, s.out_channels * area};
                        },
                        [](const MaxPool2dSpec&) { return Fans{0, 0}; },
                        [](const DenseLayerSpec& s) { return Fans{s.in_features, s.out_features}; },
                    },
                    spec);
}

Tensor layer_forward(const Layer& l, const Tensor& x) {
  return std::visit(
      Overloaded{
          [&](const ConvLayerSpec& s) { return conv1d_apply(x, s, l.weight, l.bias); },
          [&](const Conv2dLayerSpec& s) { return conv2d_apply(x, s, l.weight, l.bias); },
          [&](const MaxPool2dSpec& s) { return maxpool2d_apply(x, s); },
          [&](const DenseLayerSpec& s) { return dense_apply(x, s, l.weight, l.bias); },
      },
      l.spec);
}

}  // namespace

bool Layer::is_conv() const {
  return std::holds_alternative<ConvLayerSpec>(spec) ||
         std::holds_alternative<Conv2dLayerSpec>(spec);
}

bool Layer::is_dense() const { return std::holds_alternative<DenseLayerSpec>(spec); }

Layer& Network::add(std::string name, LayerSpec spec) {
  std::visit([](const auto& s) { validate(s); }, spec);
  for (const auto& l : layers_) {
    if (l.name == name) throw ConfigError("duplicate layer name '" + name + "'");
  }
  Layer layer;
  layer.name = std::move(name);
  const Shape ws = weight_shape(spec);
  if (!ws.empty()) {
    layer.weight = Tensor(ws);
    layer.bias = Tensor(bias_shape(spec));
  }
  layer.spec = std::move(spec);
  layers_.push_back(std::move(layer));
  return layers_.back();
}

void Network::initialize(std::uint64_t seed, std::string_view selector) {
  std::mt19937_64 rng(seed);
  for (auto& l : layers_) {
    if (!l.has_params() || !selector_matches(l, selector)) continue;
    const Fans f = fans_of(l.spec);
    const bool relu = activation_of(l.spec) == Activation::relu;
    const double limit = relu ? std::sqrt(6.0 / static_cast<double>(f.in))
                              : std::sqrt(6.0 / static_cast<double>(f.in + f.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : l.weight.storage()) w = dist(rng);
    l.bias.fill(0.0);
  }
}

Layer& Network::layer(std::string_view name) {
  for (auto& l : layers_) {
    if (l.name == name) return l;
  }
  throw ConfigError("no layer named '" + std::string(name) + "'");
}

const Layer& Network::layer(std::string_view name) const {
  return const_cast<Network*>(this)->layer(name);
}

Tensor Network::forward(const Tensor& input) const {
  if (layers_.empty()) throw ConfigError("network has no layers");
  Tensor x = layer_forward(layers_.front(), input);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layer_forward(layers_[i], x);
  return x;
}

Tensor Network::forward(const Tensor& input, ForwardTrace& trace) const {
  if (layers_.empty()) throw ConfigError("network has no layers");
  trace.inputs.clear();
  trace.outputs.clear();
  trace.inputs.reserve(layers_.size());
  trace.outputs.reserve(layers_.size());
  const Tensor* x = &input;
  for (const auto& l : layers_) {
    trace.inputs.push_back(*x);
    trace.outputs.push_back(layer_forward(l, *x));
    x = &trace.outputs.back();
  }
  return trace.outputs.back();
}

Gradients Network::backward(const ForwardTrace& trace, const Tensor& grad_output) const {
  if (trace.outputs.size() != layers_.size()) {
    throw ShapeError("forward trace does not match network depth");
  }
  if (grad_output.shape() != trace.outputs.back().shape()) {
    throw ShapeError("output gradient shape " + shape_to_string(grad_output.shape()) +
                     ", expected " + shape_to_string(trace.outputs.back().shape()));
  }
  Gradients grads(layers_.size());
  std::size_t first = layers_.size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].has_params() && layers_[i].trainable) {
      first = i;
      break;
    }
  }
  if (first == layers_.size()) return grads;

  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > first;) {
    const Layer& l = layers_[i];
    const bool want_params = l.has_params() && l.trainable;
    const bool want_input = i > first;
    activation_backward(activation_of(l.spec), trace.outputs[i], g);
    Tensor* dw = nullptr;
    Tensor* db = nullptr;
    if (want_params) {
      grads[i].weight = Tensor(l.weight.shape());
      grads[i].bias = Tensor(l.bias.shape());
      dw = &grads[i].weight;
      db = &grads[i].bias;
    }
    const Tensor& x = trace.inputs[i];
    g = std::visit(
        Overloaded{
            [&](const ConvLayerSpec& s) {
              return conv1d_backward(x, s, l.weight, g, dw, db, want_input);
            },
            [&](const Conv2dLayerSpec& s) {
              return conv2d_backward(x, s, l.weight, g, dw, db, want_input);
            },
            [&](const MaxPool2dSpec& s) { return maxpool2d_backward(x, s, g); },
            [&](const DenseLayerSpec& s) {
              return dense_backward(x, s, l.weight, g, dw, db, want_input);
            },
        },
        l.spec);
  }
  return grads;
}

std::vector<Shape> Network::layer_output_shapes(const Shape& input) const {
  std::vector<Shape> shapes;
  Shape s = input;
  for (const auto& l : layers_) {
    s = output_shape(l.spec, s);
    shapes.push_back(s);
  }
  return shapes;
}

bool selector_matches(const Layer& layer, std::string_view selector) {
  if (layer.name == selector) return true;
  if (!layer.has_params()) return false;
  if (selector == "*") return true;
  if (selector == "conv") return layer.is_conv();
  if (selector == "dense") return layer.is_dense();
  return false;
}

std::size_t Network::set_trainable(std::string_view selector, bool trainable) {
  std::size_t matched = 0;
  for (auto& l : layers_) {
    if (selector_matches(l, selector)) {
      l.trainable = trainable;
      ++matched;
    }
  }
  if (matched == 0) {
    throw ConfigError("layer selector '" + std::string(selector) + "' matched no layers");
  }
  return matched;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::size_t Network::trainable_parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (l.trainable) n += l.weight.size() + l.bias.size();
  }
  return n;
}

}  // namespace nilm
