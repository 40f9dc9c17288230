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
#include <string>
#include <string_view>
#include <vector>

#include "nilm/layers.hpp"
#include "nilm/tensor.hpp"

namespace nilm {

struct Layer {
  std::string name;
  LayerSpec spec;
  Tensor weight;  // empty for parameter-free layers
  Tensor bias;
  bool trainable = true;

  bool has_params() const { return !weight.empty(); }
  bool is_conv() const;
  bool is_dense() const;
};

// Per-layer parameter gradients, index-aligned with Network::layers(). Layers
// that are frozen or parameter-free carry empty tensors.
struct ParamGrad {
  Tensor weight;
  Tensor bias;
};
using Gradients = std::vector<ParamGrad>;

// Activations saved by a training forward pass: inputs[i] is the input of
// layer i, outputs[i] its post-activation output.
struct ForwardTrace {
  std::vector<Tensor> inputs;
  std::vector<Tensor> outputs;
};

/// A feed-forward stack of layers.
///
/// Forward passes are const and touch no shared mutable state, so a
/// finished network can serve inference from several threads at once.
class Network {
 public:
  Network() = default;

  // Appends a layer with zero-filled parameters. Names must be unique.
  Layer& add(std::string name, LayerSpec spec);

  // He-uniform for layers followed by ReLU, Xavier-uniform otherwise, zero
  // biases. Layers are filled in order from one generator seeded with `seed`.
  // Only layers matching `selector` (see set_trainable) are touched.
  void initialize(std::uint64_t seed, std::string_view selector = "*");

  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  Layer& layer(std::string_view name);
  const Layer& layer(std::string_view name) const;

  Tensor forward(const Tensor& input) const;
  Tensor forward(const Tensor& input, ForwardTrace& trace) const;

  // Back-propagates `grad_output` (gradient of the loss w.r.t. the network
  // output). Gradients are produced only for trainable layers, and the pass
  // stops early once no earlier layer is trainable.
  Gradients backward(const ForwardTrace& trace, const Tensor& grad_output) const;

  // Output shape for a given input shape; throws ShapeError on mismatch.
  std::vector<Shape> layer_output_shapes(const Shape& input) const;

  // Marks layers matching `selector` as (non-)trainable; returns the number
  // matched. Throws ConfigError when nothing matches. A selector matches a
  // layer by exact name, or by kind: "conv" (1D and 2D convolutions),
  // "dense", or "*" for all parameterized layers.
  std::size_t set_trainable(std::string_view selector, bool trainable);

  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;

 private:
  std::vector<Layer> layers_;
};

bool selector_matches(const Layer& layer, std::string_view selector);

}  // namespace nilm
