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

#include "nilm/signature.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include "nilm/error.hpp"
#include "nilm/kernels.hpp"

namespace nilm {

std::string_view transform_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::wavelet: return "wavelet";
    case TransformKind::stft: return "stft";
    case TransformKind::fused: return "fused";
  }
  return "?";
}

TransformKind parse_transform(std::string_view name) {
  if (name == "wavelet") return TransformKind::wavelet;
  if (name == "stft") return TransformKind::stft;
  if (name == "fused") return TransformKind::fused;
  throw ConfigError("unknown transform '" + std::string(name) + "' (wavelet, stft, fused)");
}

// ---- CWT -------------------------------------------------------------------------

void validate(const CwtConfig& c) {
  if (c.min_scale < 1 || c.max_scale > 500 || c.min_scale > c.max_scale) {
    throw ConfigError("CWT scales must satisfy 1 <= min <= max <= 500");
  }
}

double mexican_hat(double t) {
  const double norm = 2.0 / (std::sqrt(3.0) * std::pow(std::numbers::pi, 0.25));
  const double t2 = t * t;
  return norm * (1.0 - t2) * std::exp(-0.5 * t2);
}

std::vector<double> mexican_hat_kernel(double scale) {
  if (!(scale > 0.0)) throw ConfigError("wavelet scale must be positive");
  const auto half = static_cast<std::ptrdiff_t>(std::floor(5.0 * scale));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double mean = 0.0;
  for (std::ptrdiff_t n = -half; n <= half; ++n) {
    const double v = mexican_hat(static_cast<double>(n) / scale);
    k[static_cast<std::size_t>(n + half)] = v;
    mean += v;
  }
  mean /= static_cast<double>(k.size());
  for (auto& v : k) v -= mean;
  return k;
}

Tensor mexican_hat_cwt(std::span<const double> window, const CwtConfig& config) {
  validate(config);
  if (window.size() < 2) throw DataError("CWT needs at least two samples");
  require_finite(window, "CWT input");
  const std::size_t n = window.size();
  const std::size_t period = 2 * n;
  // One period of the symmetric extension, repeated so any period-long run
  // starting at index < period is contiguous.
  std::vector<double> ext(2 * period);
  for (std::size_t i = 0; i < n; ++i) {
    ext[i] = window[i];
    ext[period - 1 - i] = window[i];
  }
  std::copy_n(ext.begin(), period, ext.begin() + static_cast<std::ptrdiff_t>(period));

  Tensor out(Shape{config.scale_count(), n});
  std::vector<double> folded(period);
  const auto& kt = kernels::active();
  for (std::size_t r = 0; r < config.scale_count(); ++r) {
    const auto k = mexican_hat_kernel(static_cast<double>(config.min_scale + r));
    const std::size_t half = k.size() / 2;
    double* row = out.data() + r * n;
    // The kernel is even, so convolution equals correlation:
    // out[i] = sum_m k[m] * x[i + m - half]. Fold the taps onto one period of
    // the extension so the cost stays bounded for wide kernels.
    std::fill(folded.begin(), folded.end(), 0.0);
    for (std::size_t m = 0; m < k.size(); ++m) {
      // position (m - half) relative to i, reduced modulo the period
      const std::size_t pos = (m + period * (half / period + 1) - half) % period;
      folded[pos] += k[m];
    }
    // out[i] = sum_p folded[p] * ext[(i + p) mod period]
    for (std::size_t i = 0; i < n; ++i) row[i] = kt.dot(folded.data(), ext.data() + i, period);
  }
  return out;
}

// ---- STFT -----------------------------------------------------------------------------

void validate(const StftConfig& c) {
  if (c.segment < 2) throw ConfigError("STFT segment must be >= 2");
  if (c.hop < 1 || c.hop > c.segment) throw ConfigError("STFT hop must lie in [1, segment]");
}

std::vector<double> window_taps(WindowFunction fn, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (fn == WindowFunction::hann) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
  }
  return w;
}

namespace {

// The FFTW planner is not re-entrant; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    if (!in_ || !out_) throw Error("FFTW allocation failed");
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    if (!plan_) throw Error("FFTW planning failed");
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  const fftw_complex* execute() {
    fftw_execute(plan_);
    return out_;
  }

 private:
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace

Tensor stft_spectrogram(std::span<const double> window, const StftConfig& config) {
  validate(config);
  if (window.size() < config.segment) {
    throw DataError("STFT input of " + std::to_string(window.size()) +
                    " samples is shorter than one segment (" + std::to_string(config.segment) + ")");
  }
  require_finite(window, "STFT input");
  const std::size_t seg = config.segment;
  const std::size_t bins = seg / 2 + 1;
  const std::size_t frames = (window.size() - seg) / config.hop + 1;
  const auto taps = window_taps(config.window, seg);
  Tensor out(Shape{bins, frames});
  RealFft fft(seg);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* x = window.data() + f * config.hop;
    for (std::size_t i = 0; i < seg; ++i) fft.input()[i] = x[i] * taps[i];
    const fftw_complex* X = fft.execute();
    for (std::size_t k = 0; k < bins; ++k) out.at(k, f) = std::hypot(X[k][0], X[k][1]);
  }
  return out;
}

// ---- images ----------------------------------------------------------------------------------

Image normalize_matrix(const Tensor& m) {
  if (m.rank() != 2) throw ShapeError("image source must be a matrix");
  require_finite(m.values(), "image source");
  Image img(m.dim(0), m.dim(1));
  const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
  const double a = *lo, range = *hi - *lo;
  for (std::size_t i = 0; i < m.size(); ++i) img.pixels[i] = range > 0.0 ? (m[i] - a) / range : 0.5;
  return img;
}

namespace {

// src coordinate of output index i when stretching n_src samples over n_dst
// with aligned end points.
double aligned_coord(std::size_t i, std::size_t n_src, std::size_t n_dst) {
  if (n_dst == 1 || n_src == 1) return 0.0;
  return static_cast<double>(i) * static_cast<double>(n_src - 1) / static_cast<double>(n_dst - 1);
}

// Bilinear sample. Coordinates outside the frame, beyond a small tolerance
// for rounding at exact edges, clear *inside and return 0.
double sample_bilinear(const Image& img, double y, double x, bool* inside) {
  constexpr double kTol = 1e-9;
  const double ymax = static_cast<double>(img.height - 1), xmax = static_cast<double>(img.width - 1);
  if (y < -kTol || x < -kTol || y > ymax + kTol || x > xmax + kTol) {
    *inside = false;
    return 0.0;
  }
  *inside = true;
  y = std::clamp(y, 0.0, ymax);
  x = std::clamp(x, 0.0, xmax);
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
  const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
  const double top = img.at(y0, x0) * (1.0 - fx) + img.at(y0, x1) * fx;
  const double bot = img.at(y1, x0) * (1.0 - fx) + img.at(y1, x1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

}  // namespace

Image resize_bilinear(const Image& src, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || src.pixels.empty()) throw ShapeError("empty image size");
  Image out(height, width);
  bool inside = true;
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = aligned_coord(y, src.height, height);
    for (std::size_t x = 0; x < width; ++x) {
      out.at(y, x) = sample_bilinear(src, sy, aligned_coord(x, src.width, width), &inside);
    }
  }
  return out;
}

Image render_image(const Tensor& matrix, std::size_t height, std::size_t width) {
  return resize_bilinear(normalize_matrix(matrix), height, width);
}

Image fuse_images(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("cannot fuse " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                     " with " + std::to_string(b.height) + "x" + std::to_string(b.width));
  }
  Image out(a.height, a.width);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    out.pixels[i] = std::min(1.0, a.pixels[i] + b.pixels[i]);
  }
  return out;
}

SpectrogramImage fuse_images(const SpectrogramImage& wavelet, const SpectrogramImage& stft) {
  if (wavelet.label != stft.label || wavelet.source.house != stft.source.house ||
      wavelet.source.channel != stft.source.channel || wavelet.source.start != stft.source.start) {
    throw DataError("cannot fuse images of different windows: " + wavelet.id + " and " + stft.id);
  }
  SpectrogramImage out = wavelet;
  out.image = fuse_images(wavelet.image, stft.image);
  out.kind = TransformKind::fused;
  const std::string suffix = "_" + std::string(transform_name(wavelet.kind));
  if (out.id.size() >= suffix.size() && out.id.compare(out.id.size() - suffix.size(), suffix.size(), suffix) == 0) {
    out.id.resize(out.id.size() - suffix.size());
  }
  if (!out.id.empty()) out.id += "_fused";
  return out;
}

// ---- sliding dataset --------------------------------------------------------------------------

void validate(const SlidingConfig& c) {
  if (c.max_points < 2) throw ConfigError("sliding window must hold at least 2 points");
  if (c.offset < 1 || c.offset > c.max_points) {
    throw ConfigError("sliding offset must lie in [1, window length]");
  }
}

Image transform_window(std::span<const double> window, TransformKind kind,
                       const SignatureConfig& config) {
  switch (kind) {
    case TransformKind::wavelet:
      return render_image(mexican_hat_cwt(window, config.cwt), config.height, config.width);
    case TransformKind::stft:
      return render_image(stft_spectrogram(window, config.stft), config.height, config.width);
    case TransformKind::fused:
      return fuse_images(transform_window(window, TransformKind::wavelet, config),
                         transform_window(window, TransformKind::stft, config));
  }
  throw ConfigError("bad transform kind");
}

std::vector<SpectrogramImage> sliding_spectrogram_dataset(std::span<const double> readings,
                                                          const Provenance& source,
                                                          const std::string& label,
                                                          TransformKind kind,
                                                          const SignatureConfig& config) {
  validate(config.sliding);
  const std::size_t len = config.sliding.max_points;
  if (readings.size() < len) {
    throw DataError("channel has " + std::to_string(readings.size()) +
                    " readings, fewer than one window of " + std::to_string(len));
  }
  std::vector<SpectrogramImage> out;
  for (std::size_t it = 0, s = 0; it < config.sliding.max_iterations && s + len <= readings.size();
       ++it, s += config.sliding.offset) {
    SpectrogramImage img;
    img.image = transform_window(readings.subspan(s, len), kind, config);
    img.kind = kind;
    img.label = label;
    img.source = source;
    img.source.start = s;
    img.id = label + "_" + source.house + "_c" + std::to_string(source.channel) + "_s" +
             std::to_string(s) + "_" + std::string(transform_name(kind));
    out.push_back(std::move(img));
  }
  return out;
}

// ---- augmentation --------------------------------------------------------------------------------

AugmentOp sample_augmentation(const AugmentRanges& r, std::size_t height, std::size_t width,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  AugmentOp op;
  op.kind = static_cast<AugmentKind>(rng() % 3);
  switch (op.kind) {
    case AugmentKind::rotate:
      op.angle_degrees = uniform(-r.max_rotation_degrees, r.max_rotation_degrees);
      break;
    case AugmentKind::shear:
      op.shear = uniform(-r.max_shear, r.max_shear);
      break;
    case AugmentKind::crop: {
      const double f = uniform(r.min_crop_fraction, 1.0);
      op.box_width = std::max<std::size_t>(2, static_cast<std::size_t>(std::round(f * static_cast<double>(width))));
      op.box_height = std::max<std::size_t>(2, static_cast<std::size_t>(std::round(f * static_cast<double>(height))));
      op.box_width = std::min(op.box_width, width);
      op.box_height = std::min(op.box_height, height);
      op.x0 = static_cast<std::size_t>(rng() % (width - op.box_width + 1));
      op.y0 = static_cast<std::size_t>(rng() % (height - op.box_height + 1));
      break;
    }
  }
  return op;
}

Image augment_image(const Image& img, const AugmentOp& op) {
  if (img.pixels.empty()) throw ShapeError("cannot augment an empty image");
  Image out(img.height, img.width);
  const double cy = static_cast<double>(img.height - 1) / 2.0;
  const double cx = static_cast<double>(img.width - 1) / 2.0;
  bool inside = true;
  switch (op.kind) {
    case AugmentKind::rotate: {
      // Inverse mapping: rotate each output coordinate back by the angle.
      const double th = op.angle_degrees * std::numbers::pi / 180.0;
      const double c = std::cos(th), s = std::sin(th);
      for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          const double sx = c * dx + s * dy + cx;
          const double sy = -s * dx + c * dy + cy;
          const double v = sample_bilinear(img, sy, sx, &inside);
          out.at(y, x) = inside ? v : 0.0;
        }
      }
      break;
    }
    case AugmentKind::shear:
      for (std::size_t y = 0; y < img.height; ++y) {
        const double shift = op.shear * (static_cast<double>(y) - cy);
        for (std::size_t x = 0; x < img.width; ++x) {
          const double v = sample_bilinear(img, static_cast<double>(y), static_cast<double>(x) - shift, &inside);
          out.at(y, x) = inside ? v : 0.0;
        }
      }
      break;
    case AugmentKind::crop: {
      if (op.box_width < 2 || op.box_height < 2 || op.x0 + op.box_width > img.width ||
          op.y0 + op.box_height > img.height) {
        throw ConfigError("degenerate crop box");
      }
      for (std::size_t y = 0; y < img.height; ++y) {
        const double sy = static_cast<double>(op.y0) + aligned_coord(y, op.box_height, img.height);
        for (std::size_t x = 0; x < img.width; ++x) {
          const double sx = static_cast<double>(op.x0) + aligned_coord(x, op.box_width, img.width);
          out.at(y, x) = sample_bilinear(img, sy, sx, &inside);
        }
      }
      break;
    }
  }
  return out;
}

// ---- split ----------------------------------------------------------------------------------------

SplitResult split_train_test(const std::vector<SpectrogramImage>& images, const SplitConfig& config) {
  if (!(config.augmentation_budget >= 0.0 && config.augmentation_budget <= 1.0)) {
    throw ConfigError("augmentation budget must lie in [0, 1]");
  }
  std::map<std::string, std::vector<const SpectrogramImage*>> by_class;
  for (const auto& img : images) {
    auto& list = by_class[img.label];
    if (img.original) list.push_back(&img);
  }
  const std::size_t want[2] = {config.train_per_class, config.test_per_class};
  SplitResult out;
  std::vector<SpectrogramImage>* dest[2] = {&out.train, &out.test};
  std::uint64_t class_no = 0;
  for (auto& [label, originals] : by_class) {
    ++class_no;
    if (originals.empty()) throw DataError("class '" + label + "' has no original images");
    std::vector<std::size_t> order(originals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(config.seed ^ (class_no * 0x9E3779B97F4A7C15ull));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    // Originals per split: everything needed when there are enough, else a
    // proportional share with at least one original on each non-empty side.
    const std::size_t n = originals.size();
    std::size_t take[2];
    if (n >= want[0] + want[1]) {
      take[0] = want[0];
      take[1] = want[1];
    } else {
      if (want[0] > 0 && want[1] > 0 && n < 2) {
        throw DataError("class '" + label + "' needs at least two originals to fill both splits");
      }
      take[1] = want[1] == 0 ? 0
                             : std::clamp<std::size_t>(n * want[1] / (want[0] + want[1]), 1,
                                                       std::min(want[1], n - (want[0] > 0 ? 1 : 0)));
      take[0] = std::min(want[0], n - take[1]);
    }
    std::size_t next = 0;
    for (int side = 0; side < 2; ++side) {
      const std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(next),
                                          order.begin() + static_cast<std::ptrdiff_t>(next + take[side]));
      next += take[side];
      const std::size_t shortfall = want[side] - take[side];
      if (want[side] > 0 &&
          static_cast<double>(shortfall) > config.augmentation_budget * static_cast<double>(want[side]) + 1e-9) {
        throw ConfigError("class '" + label + "' needs " + std::to_string(shortfall) +
                          " augmented images in the " + (side == 0 ? "train" : "test") +
                          " split, above the augmentation budget");
      }
      for (std::size_t i : pool) dest[side]->push_back(*originals[i]);
      for (std::size_t a = 0; a < shortfall; ++a) {
        const SpectrogramImage& parent = *originals[pool[a % pool.size()]];
        const std::uint64_t op_seed = config.seed + class_no * 1000003ull + side * 7919ull + a;
        const AugmentOp op = sample_augmentation(config.ranges, parent.image.height,
                                                 parent.image.width, op_seed);
        SpectrogramImage aug = parent;
        aug.image = augment_image(parent.image, op);
        aug.original = false;
        aug.parent = parent.id;
        aug.id = parent.id + "_aug" + std::to_string(a);
        dest[side]->push_back(std::move(aug));
      }
    }
  }
  return out;
}

}  // namespace nilm
