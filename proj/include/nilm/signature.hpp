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
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nilm/tensor.hpp"

namespace nilm {

enum class TransformKind { wavelet, stft, fused };
std::string_view transform_name(TransformKind kind);
TransformKind parse_transform(std::string_view name);

// ---- transforms --------------------------------------------------------------

struct CwtConfig {
  std::size_t min_scale = 1;
  std::size_t max_scale = 500;

  std::size_t scale_count() const { return max_scale - min_scale + 1; }
};

void validate(const CwtConfig& config);

/// (2 / (sqrt(3) * pi^(1/4))) * (1 - t^2) * exp(-t^2 / 2)
double mexican_hat(double t);

/// Taps at t = n / scale for n in [-floor(5*scale), floor(5*scale)], shifted
/// by their mean so the kernel sums to zero.
std::vector<double> mexican_hat_kernel(double scale);

/// [scale_count, window.size()] coefficients. The signal is extended by
/// symmetric reflection (x[-1] = x[0]) on both sides.
Tensor mexican_hat_cwt(std::span<const double> window, const CwtConfig& config);

enum class WindowFunction { rectangular, hann };

struct StftConfig {
  std::size_t segment = 64;
  std::size_t hop = 32;
  WindowFunction window = WindowFunction::hann;
};

void validate(const StftConfig& config);

/// Periodic Hann or all ones.
std::vector<double> window_taps(WindowFunction fn, std::size_t n);

/// [segment/2 + 1, frames] DFT magnitudes, frames = (n - segment)/hop + 1.
Tensor stft_spectrogram(std::span<const double> window, const StftConfig& config);

// ---- images --------------------------------------------------------------------

constexpr std::size_t kImageHeight = 34;
constexpr std::size_t kImageWidth = 56;

struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major, values in [0, 1]

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}
  double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  bool operator==(const Image&) const = default;
};

struct Provenance {
  std::string house;
  int channel = 0;
  std::size_t start = 0;
};

struct SpectrogramImage {
  Image image;
  TransformKind kind = TransformKind::wavelet;
  std::string label;
  Provenance source;
  bool original = true;
  std::string id;      // unique within a dataset
  std::string parent;  // id of the original an augmentation came from
};

/// Min-max normalization to [0,1] (a constant matrix becomes 0.5) followed
/// by bilinear resampling with aligned corners to height x width.
Image render_image(const Tensor& matrix, std::size_t height = kImageHeight,
                   std::size_t width = kImageWidth);

/// Min-max only, at the matrix's own size.
Image normalize_matrix(const Tensor& matrix);

Image resize_bilinear(const Image& src, std::size_t height, std::size_t width);

/// Pixel-wise sum clamped to 1.
Image fuse_images(const Image& a, const Image& b);
SpectrogramImage fuse_images(const SpectrogramImage& wavelet, const SpectrogramImage& stft);

// ---- sliding dataset ----------------------------------------------------------------

struct SlidingConfig {
  std::size_t max_points = 300;  // window length
  std::size_t offset = 150;
  std::size_t max_iterations = 1000;
};

void validate(const SlidingConfig& config);

struct SignatureConfig {
  SlidingConfig sliding;
  CwtConfig cwt;
  StftConfig stft;
  std::size_t height = kImageHeight;
  std::size_t width = kImageWidth;
};

/// One image of `kind` for a single slice of readings.
Image transform_window(std::span<const double> window, TransformKind kind,
                       const SignatureConfig& config);

/// Slides [S, S + max_points) over the readings from S = 0 in steps of
/// `offset`, stopping after max_iterations or when the slice would run past
/// the data. Throws DataError if the data is shorter than one slice.
std::vector<SpectrogramImage> sliding_spectrogram_dataset(std::span<const double> readings,
                                                          const Provenance& source,
                                                          const std::string& label,
                                                          TransformKind kind,
                                                          const SignatureConfig& config);

// ---- augmentation ------------------------------------------------------------------------

enum class AugmentKind { rotate, shear, crop };

struct AugmentOp {
  AugmentKind kind = AugmentKind::rotate;
  double angle_degrees = 0.0;  // rotate
  double shear = 0.0;          // horizontal shear factor
  // crop box in pixels
  std::size_t x0 = 0, y0 = 0, box_width = 0, box_height = 0;
};

struct AugmentRanges {
  double max_rotation_degrees = 15.0;
  double max_shear = 0.2;
  double min_crop_fraction = 0.8;
};

AugmentOp sample_augmentation(const AugmentRanges& ranges, std::size_t height, std::size_t width,
                              std::uint64_t seed);

/// Same size as the input; pixels whose source falls outside the frame are 0.
Image augment_image(const Image& img, const AugmentOp& op);

// ---- split -----------------------------------------------------------------------------------

struct SplitConfig {
  std::size_t train_per_class = 600 / 19;
  std::size_t test_per_class = 200 / 19;
  double augmentation_budget = 1.0;  // max fraction of augmented images in a split
  AugmentRanges ranges;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<SpectrogramImage> train;
  std::vector<SpectrogramImage> test;
};

/// Balanced per-class split. Originals are assigned to a split first and
/// augmentations of an original always join that original's split, so no
/// ancestry crosses the split. Classes are processed in name order.
SplitResult split_train_test(const std::vector<SpectrogramImage>& images, const SplitConfig& config);

// ---- storage ---------------------------------------------------------------------------------

void write_png(const Image& img, const std::filesystem::path& file);
Image read_png(const std::filesystem::path& file);

struct ManifestEntry {
  std::string path;  // relative to the manifest
  std::string label;
  TransformKind kind = TransformKind::wavelet;
  Provenance source;
  bool original = true;
  std::string id;
  std::string parent;
  std::string split;  // "train", "test" or empty
};

/// CSV header: path,class,kind,house,channel,start,original,id,parent,split
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& file);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file);

/// Writes each image as <dir>/<id>.png and returns manifest rows.
std::vector<ManifestEntry> store_images(const std::vector<SpectrogramImage>& images,
                                        const std::filesystem::path& dir,
                                        const std::string& split = {});

}  // namespace nilm
