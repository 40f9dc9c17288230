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
#include <string_view>
#include <variant>

#include "nilm/tensor.hpp"

namespace nilm {

enum class Activation { none, relu, softmax };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// 1D convolution (cross-correlation, no kernel flip) over [batch, channels, width].
struct ConvLayerSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Activation activation = Activation::relu;

  bool operator==(const ConvLayerSpec&) const = default;
};

/// Square-kernel 2D convolution over [batch, channels, height, width].
struct Conv2dLayerSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Activation activation = Activation::relu;

  bool operator==(const Conv2dLayerSpec&) const = default;
};

/// Non-overlapping max pooling with a square window (window == stride).
struct MaxPool2dSpec {
  std::size_t window = 2;

  bool operator==(const MaxPool2dSpec&) const = default;
};

/// Affine map y = x W^T + b on inputs flattened to [batch, in_features].
struct DenseLayerSpec {
  std::size_t in_features = 1;
  std::size_t out_features = 1;
  Activation activation = Activation::none;

  bool operator==(const DenseLayerSpec&) const = default;
};

using LayerSpec = std::variant<ConvLayerSpec, Conv2dLayerSpec, MaxPool2dSpec, DenseLayerSpec>;

void validate(const ConvLayerSpec& spec);
void validate(const Conv2dLayerSpec& spec);
void validate(const MaxPool2dSpec& spec);
void validate(const DenseLayerSpec& spec);

// floor((width - kernel + 2*padding) / stride) + 1. Throws ShapeError when
// width + 2*padding < kernel.
std::size_t conv_output_size(std::size_t width, std::size_t kernel, std::size_t stride,
                             std::size_t padding);
std::size_t conv_output_size(std::size_t width, const ConvLayerSpec& spec);

// Parameter shapes. Pooling has none (empty Shape).
Shape weight_shape(const LayerSpec& spec);
Shape bias_shape(const LayerSpec& spec);
Activation activation_of(const LayerSpec& spec);

// Output shape of the layer for a given input shape (batch first).
Shape output_shape(const LayerSpec& spec, const Shape& input);

// In-place activations over rows of a [batch, ...] tensor. Softmax normalizes
// each batch row.
void apply_activation(Activation a, Tensor& t);
// Converts a gradient w.r.t. the activation output into a gradient w.r.t.
// its input, given the activation output `y`.
void activation_backward(Activation a, const Tensor& y, Tensor& grad);

// Forward passes. Each applies the layer's activation.
Tensor conv1d_apply(const Tensor& input, const ConvLayerSpec& spec, const Tensor& weight,
                    const Tensor& bias);
Tensor conv2d_apply(const Tensor& input, const Conv2dLayerSpec& spec, const Tensor& weight,
                    const Tensor& bias);
Tensor maxpool2d_apply(const Tensor& input, const MaxPool2dSpec& spec);
Tensor dense_apply(const Tensor& input, const DenseLayerSpec& spec, const Tensor& weight,
                   const Tensor& bias);

// Backward passes take the gradient w.r.t. the pre-activation output.
// Parameter gradients are accumulated into `dweight`/`dbias` when non-null;
// the input gradient is returned when `want_input_grad` is set, otherwise an
// empty tensor.
Tensor conv1d_backward(const Tensor& input, const ConvLayerSpec& spec, const Tensor& weight,
                       const Tensor& grad_out, Tensor* dweight, Tensor* dbias,
                       bool want_input_grad);
Tensor conv2d_backward(const Tensor& input, const Conv2dLayerSpec& spec, const Tensor& weight,
                       const Tensor& grad_out, Tensor* dweight, Tensor* dbias,
                       bool want_input_grad);
Tensor maxpool2d_backward(const Tensor& input, const MaxPool2dSpec& spec,
                          const Tensor& grad_out);
Tensor dense_backward(const Tensor& input, const DenseLayerSpec& spec, const Tensor& weight,
                      const Tensor& grad_out, Tensor* dweight, Tensor* dbias,
                      bool want_input_grad);

}  // namespace nilm
