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

#include "nilm/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nilm/error.hpp"
#include "nilm/kernels.hpp"

namespace nilm {

namespace {

constexpr std::size_t kDenseTile = 512;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void dim_error(const char* layer, const char* dim, std::size_t got,
                            std::size_t want) {
  throw ShapeError(std::string(layer) + ": " + dim + " is " + std::to_string(got) +
                   ", expected " + std::to_string(want));
}

struct View1d {
  std::size_t batch, channels, width;
};

View1d view1d(const Tensor& t, std::size_t channels) {
  if (t.rank() == 2 && channels == 1) return {t.dim(0), 1, t.dim(1)};
  if (t.rank() != 3) {
    throw ShapeError("conv1d: input rank " + std::to_string(t.rank()) +
                     " (shape " + shape_to_string(t.shape()) + "), expected [batch, channels, width]");
  }
  if (t.dim(1) != channels) dim_error("conv1d", "input channels", t.dim(1), channels);
  return {t.dim(0), t.dim(1), t.dim(2)};
}

struct View2d {
  std::size_t batch, channels, height, width;
};

View2d view2d(const Tensor& t, std::size_t channels, const char* who) {
  if (t.rank() == 3 && channels == 1) return {t.dim(0), 1, t.dim(1), t.dim(2)};
  if (t.rank() != 4) {
    throw ShapeError(std::string(who) + ": input rank " + std::to_string(t.rank()) +
                     " (shape " + shape_to_string(t.shape()) +
                     "), expected [batch, channels, height, width]");
  }
  if (t.dim(1) != channels) dim_error(who, "input channels", t.dim(1), channels);
  return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
}

void check_params(const Tensor& w, const Shape& want_w, const Tensor& b, const Shape& want_b,
                  const char* who) {
  if (w.shape() != want_w) {
    throw ShapeError(std::string(who) + ": weight shape " + shape_to_string(w.shape()) +
                     ", expected " + shape_to_string(want_w));
  }
  if (b.shape() != want_b) {
    throw ShapeError(std::string(who) + ": bias shape " + shape_to_string(b.shape()) +
                     ", expected " + shape_to_string(want_b));
  }
}

// Range of output positions t for which t*stride + k - padding lands inside
// [0, width). Only used for stride 1.
inline void valid_range(std::size_t width, std::size_t out, std::size_t k, std::size_t padding,
                        std::size_t& t0, std::size_t& t1) {
  t0 = padding > k ? padding - k : 0;
  // exclusive bound; may exceed `out` or be negative
  const auto hi = static_cast<std::ptrdiff_t>(width + padding) - static_cast<std::ptrdiff_t>(k);
  t1 = hi <= 0 ? 0 : std::min(out, static_cast<std::size_t>(hi));
  if (t1 < t0) t1 = t0;
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::none:
      return "none";
    case Activation::relu:
      return "relu";
    case Activation::softmax:
      return "softmax";
  }
  return "none";
}

Activation parse_activation(std::string_view name) {
  if (name == "none") return Activation::none;
  if (name == "relu") return Activation::relu;
  if (name == "softmax") return Activation::softmax;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void validate(const ConvLayerSpec& s) {
  if (s.in_channels < 1 || s.out_channels < 1 || s.kernel_size < 1 || s.stride < 1) {
    throw ConfigError("conv1d spec requires in_c, out_c, k_s, stride >= 1");
  }
}

void validate(const Conv2dLayerSpec& s) {
  if (s.in_channels < 1 || s.out_channels < 1 || s.kernel_size < 1 || s.stride < 1) {
    throw ConfigError("conv2d spec requires in_c, out_c, k_s, stride >= 1");
  }
}

void validate(const MaxPool2dSpec& s) {
  if (s.window < 1) throw ConfigError("max-pool window must be >= 1");
}

void validate(const DenseLayerSpec& s) {
  if (s.in_features < 1 || s.out_features < 1) {
    throw ConfigError("dense spec requires in_features, out_features >= 1");
  }
}

std::size_t conv_output_size(std::size_t width, std::size_t kernel, std::size_t stride,
                             std::size_t padding) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (width + 2 * padding < kernel) {
    throw ShapeError("window of width " + std::to_string(width) + " (padding " +
                     std::to_string(padding) + ") is smaller than kernel " +
                     std::to_string(kernel));
  }
  return (width + 2 * padding - kernel) / stride + 1;
}

std::size_t conv_output_size(std::size_t width, const ConvLayerSpec& spec) {
  return conv_output_size(width, spec.kernel_size, spec.stride, spec.padding);
}

Shape weight_shape(const LayerSpec& spec) {
  return std::visit(
      Overloaded{
          [](const ConvLayerSpec& s) {
            return Shape{s.out_channels, s.in_channels, s.kernel_size};
          },
          [](const Conv2dLayerSpec& s) {
            return Shape{s.out_channels, s.in_channels, s.kernel_size, s.kernel_size};
          },
          [](const MaxPool2dSpec&) { return Shape{}; },
          [](const DenseLayerSpec& s) { return Shape{s.out_features, s.in_features}; },
      },
      spec);
}

Shape bias_shape(const LayerSpec& spec) {
  return std::visit(Overloaded{
                        [](const ConvLayerSpec& s) { return Shape{s.out_channels}; },
                        [](const Conv2dLayerSpec& s) { return Shape{s.out_channels}; },
                        [](const MaxPool2dSpec&) { return Shape{}; },
                        [](const DenseLayerSpec& s) { return Shape{s.out_features}; },
                    },
                    spec);
}

Activation activation_of(const LayerSpec& spec) {
  return std::visit(Overloaded{
                        [](const ConvLayerSpec& s) { return s.activation; },
                        [](const Conv2dLayerSpec& s) { return s.activation; },
                        [](const MaxPool2dSpec&) { return Activation::none; },
                        [](const DenseLayerSpec& s) { return s.activation; },
                    },
                    spec);
}

Shape output_shape(const LayerSpec& spec, const Shape& input) {
  return std::visit(
      Overloaded{
          [&](const ConvLayerSpec& s) {
            std::size_t width = 0;
            if (input.size() == 2 && s.in_channels == 1) {
              width = input[1];
            } else if (input.size() == 3) {
              if (input[1] != s.in_channels) {
                dim_error("conv1d", "input channels", input[1], s.in_channels);
              }
              width = input[2];
            } else {
              throw ShapeError("conv1d: input shape " + shape_to_string(input) +
                               " is not [batch, channels, width]");
            }
            return Shape{input[0], s.out_channels, conv_output_size(width, s)};
          },
          [&](const Conv2dLayerSpec& s) {
            std::size_t h = 0, w = 0;
            if (input.size() == 3 && s.in_channels == 1) {
              h = input[1];
              w = input[2];
            } else if (input.size() == 4) {
              if (input[1] != s.in_channels) {
                dim_error("conv2d", "input channels", input[1], s.in_channels);
              }
              h = input[2];
              w = input[3];
            } else {
              throw ShapeError("conv2d: input shape " + shape_to_string(input) +
                               " is not [batch, channels, height, width]");
            }
            return Shape{input[0], s.out_channels,
                         conv_output_size(h, s.kernel_size, s.stride, s.padding),
                         conv_output_size(w, s.kernel_size, s.stride, s.padding)};
          },
          [&](const MaxPool2dSpec& s) {
            if (input.size() != 4) {
              throw ShapeError("maxpool2d: input shape " + shape_to_string(input) +
                               " is not [batch, channels, height, width]");
            }
            if (input[2] < s.window || input[3] < s.window) {
              throw ShapeError("maxpool2d: spatial size smaller than pooling window");
            }
            return Shape{input[0], input[1], input[2] / s.window, input[3] / s.window};
          },
          [&](const DenseLayerSpec& s) {
            const std::size_t features = shape_size(input) / input[0];
            if (features != s.in_features) {
              dim_error("dense", "input features", features, s.in_features);
            }
            return Shape{input[0], s.out_features};
          },
      },
      spec);
}

void apply_activation(Activation a, Tensor& t) {
  switch (a) {
    case Activation::none:
      return;
    case Activation::relu:
      kernels::active().relu(t.data(), t.size());
      return;
    case Activation::softmax: {
      const std::size_t rows = t.dim(0);
      for (std::size_t r = 0; r < rows; ++r) {
        auto row = t.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (auto& v : row) {
          v = std::exp(v - mx);
          sum += v;
        }
        for (auto& v : row) v /= sum;
      }
      return;
    }
  }
}

void activation_backward(Activation a, const Tensor& y, Tensor& grad) {
  switch (a) {
    case Activation::none:
      return;
    case Activation::relu:
      kernels::active().relu_mask(y.data(), grad.data(), grad.size());
      return;
    case Activation::softmax: {
      for (std::size_t r = 0; r < y.dim(0); ++r) {
        auto p = y.row(r);
        auto g = grad.row(r);
        double inner = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) inner += p[k] * g[k];
        for (std::size_t k = 0; k < p.size(); ++k) g[k] = p[k] * (g[k] - inner);
      }
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// conv1d

namespace {

// col[(ic*K + k) * ow + t] = x[ic, t*stride + k - padding], zero outside.
// col[(ic*K + k) * ld + t] for t < ow; ld >= ow lets several samples share
// one matrix side by side.
void im2col_1d(const double* x, std::size_t channels, std::size_t width, const ConvLayerSpec& s,
               std::size_t ow, std::size_t ld, double* col) {
  const std::size_t K = s.kernel_size;
  for (std::size_t ic = 0; ic < channels; ++ic) {
    const double* xr = x + ic * width;
    for (std::size_t k = 0; k < K; ++k) {
      double* row = col + (ic * K + k) * ld;
      if (s.stride == 1 && s.padding == 0) {
        std::copy(xr + k, xr + k + ow, row);
        continue;
      }
      for (std::size_t t = 0; t < ow; ++t) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * s.stride + k) -
                                   static_cast<std::ptrdiff_t>(s.padding);
        row[t] = pos >= 0 && pos < static_cast<std::ptrdiff_t>(width) ? xr[pos] : 0.0;
      }
    }
  }
}

// Transposed layout: colt[t * (channels*K) + ic*K + k].
void im2col_1d_t(const double* x, std::size_t channels, std::size_t width,
                 const ConvLayerSpec& s, std::size_t ow, double* colt) {
  const std::size_t K = s.kernel_size, CK = channels * K;
  for (std::size_t t = 0; t < ow; ++t) {
    double* row = colt + t * CK;
    for (std::size_t ic = 0; ic < channels; ++ic) {
      const double* xr = x + ic * width;
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t * s.stride) -
                                  static_cast<std::ptrdiff_t>(s.padding);
      for (std::size_t k = 0; k < K; ++k) {
        const std::ptrdiff_t pos = base + static_cast<std::ptrdiff_t>(k);
        row[ic * K + k] = pos >= 0 && pos < static_cast<std::ptrdiff_t>(width) ? xr[pos] : 0.0;
      }
    }
  }
}

void col2im_1d(const double* col, std::size_t channels, std::size_t width, const ConvLayerSpec& s,
               std::size_t ow, std::size_t ld, double* dx) {
  const std::size_t K = s.kernel_size;
  for (std::size_t ic = 0; ic < channels; ++ic) {
    double* dr = dx + ic * width;
    for (std::size_t k = 0; k < K; ++k) {
      const double* row = col + (ic * K + k) * ld;
      for (std::size_t t = 0; t < ow; ++t) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * s.stride + k) -
                                   static_cast<std::ptrdiff_t>(s.padding);
        if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(width)) dr[pos] += row[t];
      }
    }
  }
}

// Samples per im2col block, keeping the column matrix near 2M doubles.
std::size_t samples_per_block(std::size_t ck, std::size_t ow, std::size_t batch) {
  constexpr std::size_t kBudget = std::size_t{1} << 21;
  return std::clamp<std::size_t>(kBudget / std::max<std::size_t>(1, ck * ow), 1, batch);
}

}  // namespace

Tensor conv1d_apply(const Tensor& input, const ConvLayerSpec& s, const Tensor& weight,
                    const Tensor& bias) {
  validate(s);
  const View1d v = view1d(input, s.in_channels);
  check_params(weight, weight_shape(s), bias, bias_shape(s), "conv1d");
  const std::size_t ow = conv_output_size(v.width, s);
  const std::size_t OC = s.out_channels, CK = s.in_channels * s.kernel_size;
  const std::size_t in_stride = s.in_channels * v.width;
  const auto& kt = kernels::active();

  Tensor out(Shape{v.batch, OC, ow});
  const std::size_t nb = samples_per_block(CK, ow, v.batch);
  std::vector<double> col(CK * nb * ow), y(OC * nb * ow);
  for (std::size_t b0 = 0; b0 < v.batch; b0 += nb) {
    const std::size_t cnt = std::min(nb, v.batch - b0), ld = cnt * ow;
    for (std::size_t b = 0; b < cnt; ++b) {
      im2col_1d(input.data() + (b0 + b) * in_stride, s.in_channels, v.width, s, ow, ld,
                col.data() + b * ow);
    }
    for (std::size_t oc = 0; oc < OC; ++oc) std::fill(y.begin() + oc * ld, y.begin() + (oc + 1) * ld, bias[oc]);
    kt.gemm(OC, ld, CK, weight.data(), CK, col.data(), ld, y.data(), ld);
    for (std::size_t b = 0; b < cnt; ++b) {
      double* dst = out.data() + (b0 + b) * OC * ow;
      for (std::size_t oc = 0; oc < OC; ++oc) {
        const double* src = y.data() + oc * ld + b * ow;
        std::copy(src, src + ow, dst + oc * ow);
      }
    }
  }
  apply_activation(s.activation, out);
  return out;
}

Tensor conv1d_backward(const Tensor& input, const ConvLayerSpec& s, const Tensor& weight,
                       const Tensor& grad_out, Tensor* dweight, Tensor* dbias,
                       bool want_input_grad) {
  const View1d v = view1d(input, s.in_channels);
  const std::size_t ow = conv_output_size(v.width, s);
  const Shape want{v.batch, s.out_channels, ow};
  if (grad_out.shape() != want) {
    throw ShapeError("conv1d backward: gradient shape " + shape_to_string(grad_out.shape()) +
                     ", expected " + shape_to_string(want));
  }
  const std::size_t OC = s.out_channels, CK = s.in_channels * s.kernel_size;
  const std::size_t in_stride = s.in_channels * v.width;
  const auto& kt = kernels::active();
  Tensor dx;
  if (want_input_grad) dx = Tensor(input.shape());

  if (dbias) {
    for (std::size_t b = 0; b < v.batch; ++b) {
      const double* g = grad_out.data() + b * OC * ow;
      for (std::size_t oc = 0; oc < OC; ++oc) {
        double sum = 0.0;
        for (std::size_t t = 0; t < ow; ++t) sum += g[oc * ow + t];
        (*dbias)[oc] += sum;
      }
    }
  }
  if (!dweight && !want_input_grad) return dx;

  const std::size_t nb = samples_per_block(CK, ow, v.batch);
  std::vector<double> gm(OC * nb * ow);
  std::vector<double> colt(dweight ? nb * ow * CK : 0);
  std::vector<double> wt(want_input_grad ? CK * OC : 0), dcol(want_input_grad ? CK * nb * ow : 0);
  if (want_input_grad) {
    for (std::size_t oc = 0; oc < OC; ++oc)
      for (std::size_t j = 0; j < CK; ++j) wt[j * OC + oc] = weight[oc * CK + j];
  }
  for (std::size_t b0 = 0; b0 < v.batch; b0 += nb) {
    const std::size_t cnt = std::min(nb, v.batch - b0), ld = cnt * ow;
    // gradient as [OC, cnt*ow]
    for (std::size_t b = 0; b < cnt; ++b) {
      const double* g = grad_out.data() + (b0 + b) * OC * ow;
      for (std::size_t oc = 0; oc < OC; ++oc) std::copy(g + oc * ow, g + (oc + 1) * ow, gm.data() + oc * ld + b * ow);
    }
    if (dweight) {
      for (std::size_t b = 0; b < cnt; ++b) {
        im2col_1d_t(input.data() + (b0 + b) * in_stride, s.in_channels, v.width, s, ow,
                    colt.data() + b * ow * CK);
      }
      kt.gemm(OC, CK, ld, gm.data(), ld, colt.data(), CK, dweight->data(), CK);
    }
    if (want_input_grad) {
      std::fill(dcol.begin(), dcol.begin() + CK * ld, 0.0);
      kt.gemm(CK, ld, OC, wt.data(), OC, gm.data(), ld, dcol.data(), ld);
      for (std::size_t b = 0; b < cnt; ++b) {
        col2im_1d(dcol.data() + b * ow, s.in_channels, v.width, s, ow, ld,
                  dx.data() + (b0 + b) * in_stride);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// conv2d

Tensor conv2d_apply(const Tensor& input, const Conv2dLayerSpec& s, const Tensor& weight,
                    const Tensor& bias) {
  validate(s);
  const View2d v = view2d(input, s.in_channels, "conv2d");
  check_params(weight, weight_shape(s), bias, bias_shape(s), "conv2d");
  const std::size_t K = s.kernel_size;
  const std::size_t oh = conv_output_size(v.height, K, s.stride, s.padding);
  const std::size_t ow = conv_output_size(v.width, K, s.stride, s.padding);
  const auto& kt = kernels::active();
  const auto P = static_cast<std::ptrdiff_t>(s.padding);

  Tensor out(Shape{v.batch, s.out_channels, oh, ow});
  for (std::size_t b = 0; b < v.batch; ++b) {
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
      double* y = out.data() + (b * s.out_channels + oc) * oh * ow;
      std::fill(y, y + oh * ow, bias[oc]);
      for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
        const double* xp = input.data() + (b * s.in_channels + ic) * v.height * v.width;
        const double* wp = weight.data() + (oc * s.in_channels + ic) * K * K;
        for (std::size_t ki = 0; ki < K; ++ki) {
          for (std::size_t kj = 0; kj < K; ++kj) {
            const double wv = wp[ki * K + kj];
            if (s.stride == 1) {
              std::size_t j0, j1;
              valid_range(v.width, ow, kj, s.padding, j0, j1);
              if (j1 <= j0) continue;
              for (std::size_t i = 0; i < oh; ++i) {
                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + ki) - P;
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(v.height)) continue;
                kt.axpy(wv, xp + r * v.width + j0 + kj - s.padding, y + i * ow + j0, j1 - j0);
              }
            } else {
              for (std::size_t i = 0; i < oh; ++i) {
                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i * s.stride + ki) - P;
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(v.height)) continue;
                for (std::size_t j = 0; j < ow; ++j) {
                  const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(j * s.stride + kj) - P;
                  if (c < 0 || c >= static_cast<std::ptrdiff_t>(v.width)) continue;
                  y[i * ow + j] += wv * xp[r * v.width + c];
                }
              }
            }
          }
        }
      }
    }
  }
  apply_activation(s.activation, out);
  return out;
}

Tensor conv2d_backward(const Tensor& input, const Conv2dLayerSpec& s, const Tensor& weight,
                       const Tensor& grad_out, Tensor* dweight, Tensor* dbias,
                       bool want_input_grad) {
  const View2d v = view2d(input, s.in_channels, "conv2d");
  const std::size_t K = s.kernel_size;
  const std::size_t oh = conv_output_size(v.height, K, s.stride, s.padding);
  const std::size_t ow = conv_output_size(v.width, K, s.stride, s.padding);
  const Shape want{v.batch, s.out_channels, oh, ow};
  if (grad_out.shape() != want) {
    throw ShapeError("conv2d backward: gradient shape " + shape_to_string(grad_out.shape()) +
                     ", expected " + shape_to_string(want));
  }
  const auto& kt = kernels::active();
  const auto P = static_cast<std::ptrdiff_t>(s.padding);
  Tensor dx;
  if (want_input_grad) dx = Tensor(input.shape());

  for (std::size_t b = 0; b < v.batch; ++b) {
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
      const double* g = grad_out.data() + (b * s.out_channels + oc) * oh * ow;
      if (dbias) {
        double sum = 0.0;
        for (std::size_t t = 0; t < oh * ow; ++t) sum += g[t];
        (*dbias)[oc] += sum;
      }
      for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
        const std::size_t plane = (b * s.in_channels + ic) * v.height * v.width;
        const double* xp = input.data() + plane;
        double* dxp = want_input_grad ? dx.data() + plane : nullptr;
        const double* wp = weight.data() + (oc * s.in_channels + ic) * K * K;
        double* dwp = dweight ? dweight->data() + (oc * s.in_channels + ic) * K * K : nullptr;
        for (std::size_t ki = 0; ki < K; ++ki) {
          for (std::size_t kj = 0; kj < K; ++kj) {
            const double wv = wp[ki * K + kj];
            double acc = 0.0;
            if (s.stride == 1) {
              std::size_t j0, j1;
              valid_range(v.width, ow, kj, s.padding, j0, j1);
              if (j1 <= j0) continue;
              for (std::size_t i = 0; i < oh; ++i) {
                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + ki) - P;
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(v.height)) continue;
                const std::size_t xoff = r * v.width + j0 + kj - s.padding;
                if (dwp) acc += kt.dot(g + i * ow + j0, xp + xoff, j1 - j0);
                if (dxp) kt.axpy(wv, g + i * ow + j0, dxp + xoff, j1 - j0);
              }
            } else {
              for (std::size_t i = 0; i < oh; ++i) {
                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i * s.stride + ki) - P;
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(v.height)) continue;
                for (std::size_t j = 0; j < ow; ++j) {
                  const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(j * s.stride + kj) - P;
                  if (c < 0 || c >= static_cast<std::ptrdiff_t>(v.width)) continue;
                  const double gv = g[i * ow + j];
                  acc += gv * xp[r * v.width + c];
                  if (dxp) dxp[r * v.width + c] += gv * wv;
                }
              }
            }
            if (dwp) dwp[ki * K + kj] += acc;
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// max pooling

Tensor maxpool2d_apply(const Tensor& input, const MaxPool2dSpec& s) {
  validate(s);
  const Shape os = output_shape(s, input.shape());
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t OH = os[2], OW = os[3], k = s.window;
  Tensor out(os);
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const double* xp = input.data() + bc * H * W;
    double* yp = out.data() + bc * OH * OW;
    for (std::size_t i = 0; i < OH; ++i) {
      for (std::size_t j = 0; j < OW; ++j) {
        double m = xp[(i * k) * W + j * k];
        for (std::size_t di = 0; di < k; ++di) {
          for (std::size_t dj = 0; dj < k; ++dj) {
            m = std::max(m, xp[(i * k + di) * W + j * k + dj]);
          }
        }
        yp[i * OW + j] = m;
      }
    }
  }
  return out;
}

Tensor maxpool2d_backward(const Tensor& input, const MaxPool2dSpec& s, const Tensor& grad_out) {
  const Shape os = output_shape(s, input.shape());
  if (grad_out.shape() != os) {
    throw ShapeError("maxpool2d backward: gradient shape " + shape_to_string(grad_out.shape()) +
                     ", expected " + shape_to_string(os));
  }
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t OH = os[2], OW = os[3], k = s.window;
  Tensor dx(input.shape());
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const double* xp = input.data() + bc * H * W;
    const double* gp = grad_out.data() + bc * OH * OW;
    double* dp = dx.data() + bc * H * W;
    for (std::size_t i = 0; i < OH; ++i) {
      for (std::size_t j = 0; j < OW; ++j) {
        // First maximum in row-major window order receives the gradient.
        std::size_t best = (i * k) * W + j * k;
        for (std::size_t di = 0; di < k; ++di) {
          for (std::size_t dj = 0; dj < k; ++dj) {
            const std::size_t idx = (i * k + di) * W + j * k + dj;
            if (xp[idx] > xp[best]) best = idx;
          }
        }
        dp[best] += gp[i * OW + j];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// dense

Tensor dense_apply(const Tensor& input, const DenseLayerSpec& s, const Tensor& weight,
                   const Tensor& bias) {
  validate(s);
  const Shape os = output_shape(s, input.shape());
  check_params(weight, weight_shape(s), bias, bias_shape(s), "dense");
  const std::size_t B = os[0], in = s.in_features, out_n = s.out_features;
  const auto& kt = kernels::active();
  Tensor out(os);
  const double* x = input.data();
  double* y = out.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < out_n; ++o) y[b * out_n + o] = bias[o];
  }
  // Tiling the input dimension keeps the activations of the whole batch in
  // cache while the weight rows stream past.
  for (std::size_t t0 = 0; t0 < in; t0 += kDenseTile) {
    const std::size_t len = std::min(kDenseTile, in - t0);
    const double* xt = x + t0;
    for (std::size_t o = 0; o < out_n; ++o) {
      const double* w = weight.data() + o * in + t0;
      std::size_t b = 0;
      double acc[4];
      for (; b + 4 <= B; b += 4) {
        kt.dot4(w, xt + b * in, xt + (b + 1) * in, xt + (b + 2) * in, xt + (b + 3) * in, len, acc);
        for (int j = 0; j < 4; ++j) y[(b + j) * out_n + o] += acc[j];
      }
      for (; b < B; ++b) y[b * out_n + o] += kt.dot(w, xt + b * in, len);
    }
  }
  apply_activation(s.activation, out);
  return out;
}

Tensor dense_backward(const Tensor& input, const DenseLayerSpec& s, const Tensor& weight,
                      const Tensor& grad_out, Tensor* dweight, Tensor* dbias,
                      bool want_input_grad) {
  const Shape os = output_shape(s, input.shape());
  if (grad_out.shape() != os) {
    throw ShapeError("dense backward: gradient shape " + shape_to_string(grad_out.shape()) +
                     ", expected " + shape_to_string(os));
  }
  const std::size_t B = os[0], in = s.in_features, out_n = s.out_features;
  const auto& kt = kernels::active();
  const double* x = input.data();
  const double* g = grad_out.data();
  Tensor dx;
  if (want_input_grad) dx = Tensor(input.shape());

  if (dbias) {
    for (std::size_t o = 0; o < out_n; ++o) {
      double sum = 0.0;
      for (std::size_t b = 0; b < B; ++b) sum += g[b * out_n + o];
      (*dbias)[o] += sum;
    }
  }
  for (std::size_t t0 = 0; t0 < in; t0 += kDenseTile) {
    const std::size_t len = std::min(kDenseTile, in - t0);
    const double* xt = x + t0;
    if (dweight) {
      for (std::size_t o = 0; o < out_n; ++o) {
        double* dw = dweight->data() + o * in + t0;
        std::size_t b = 0;
        for (; b + 4 <= B; b += 4) {
          const double a[4] = {g[b * out_n + o], g[(b + 1) * out_n + o], g[(b + 2) * out_n + o],
                               g[(b + 3) * out_n + o]};
          kt.axpy4(a, xt + b * in, xt + (b + 1) * in, xt + (b + 2) * in, xt + (b + 3) * in, dw,
                   len);
        }
        for (; b < B; ++b) kt.axpy(g[b * out_n + o], xt + b * in, dw, len);
      }
    }
    if (want_input_grad) {
      const double* w = weight.data() + t0;
      double* dxt = dx.data() + t0;
      std::size_t o = 0;
      for (; o + 4 <= out_n; o += 4) {
        for (std::size_t b = 0; b < B; ++b) {
          kt.axpy4(g + b * out_n + o, w + o * in, w + (o + 1) * in, w + (o + 2) * in,
                   w + (o + 3) * in, dxt + b * in, len);
        }
      }
      for (; o < out_n; ++o) {
        for (std::size_t b = 0; b < B; ++b) kt.axpy(g[b * out_n + o], w + o * in, dxt + b * in, len);
      }
    }
  }
  return dx;
}

}  // namespace nilm
