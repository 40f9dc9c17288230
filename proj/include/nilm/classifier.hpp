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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nilm/metrics.hpp"
#include "nilm/signature.hpp"
#include "nilm/state.hpp"

namespace nilm {

constexpr std::size_t kClassifierClasses = 20;  // 19 appliances + "unknown"
constexpr std::string_view kUnknownClass = "unknown";

enum class ClassifierKind { simple_dnn, compact_cnn };
enum class HeadPreset { resnet, alexnet, densenet };

std::string_view classifier_name(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view name);
std::string_view head_name(HeadPreset head);
HeadPreset parse_head(std::string_view name);

using DensePairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// resnet: 2500-2000-1500-500-20, alexnet: 4096-1024-20, densenet: 1024-512-20.
DensePairs head_pairs(HeadPreset head);

/// 1904 -> 500 -> 150 -> classes, relu between, softmax out; SGD and
/// cross-entropy.
NetworkState build_simple_dnn(std::uint64_t seed, double learning_rate = 0.001,
                              std::size_t classes = kClassifierClasses,
                              std::size_t height = kImageHeight, std::size_t width = kImageWidth);

/// conv 1->16 3x3 pad 1, pool 2, conv 16->32 3x3 pad 1, pool 2, then a
/// projection to head.front().first and the head's dense pairs. The last
/// pair must end at the class count.
NetworkState build_compact_cnn(const DensePairs& head, std::uint64_t seed,
                               double learning_rate = 0.001, std::size_t height = kImageHeight,
                               std::size_t width = kImageWidth);
NetworkState build_compact_cnn(HeadPreset head, std::uint64_t seed, double learning_rate = 0.001,
                               std::size_t height = kImageHeight, std::size_t width = kImageWidth);

/// Label <-> output index. Known labels are sorted by name; the last slot is
/// reserved for kUnknownClass.
class ClassIndex {
 public:
  ClassIndex() = default;
  /// Throws ConfigError when there are more distinct labels than slots - 1.
  ClassIndex(std::vector<std::string> labels, std::size_t slots = kClassifierClasses);

  std::size_t slots() const { return names_.size(); }
  std::size_t unknown() const { return names_.size() - 1; }
  std::size_t known() const { return names_.size() - 1 - padding_; }
  /// Index of a label, or unknown() when the label was not seen.
  std::size_t index_of(std::string_view label) const;
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  void save(const std::filesystem::path& file) const;
  static ClassIndex load(const std::filesystem::path& file);

 private:
  std::vector<std::string> names_;  // unused slots are named "unused<i>"
  std::size_t padding_ = 0;
};

struct ImageSet {
  Tensor inputs;                    // [N, 1, H, W]
  std::vector<std::size_t> labels;  // class indices
  std::vector<std::string> ids;

  std::size_t size() const { return labels.size(); }
};

ImageSet make_image_set(const std::vector<SpectrogramImage>& images, const ClassIndex& index);

/// Reads the PNGs named by manifest rows whose split equals `split` (all rows
/// when empty). Paths are relative to `root`.
ImageSet load_image_set(const std::vector<ManifestEntry>& rows, const std::filesystem::path& root,
                        const ClassIndex& index, std::string_view split = {});

struct ClassifierConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
};

struct ClassifierCurves {
  std::vector<double> train_loss;
  std::vector<double> test_accuracy;  // percent, empty when no test set
};

/// SGD with cross-entropy. Throws DataError when a test class never occurs
/// in the training set.
ClassifierCurves train_classifier(NetworkState& state, const ImageSet& train, const ImageSet& test,
                                  const ClassifierConfig& config);

struct ClassifierEval {
  ConfusionMatrix matrix;
  MetricSet metrics;
  std::vector<std::size_t> predicted;
};

std::vector<std::size_t> classify(const Network& net, const Tensor& inputs);

/// Throws ShapeError when the images do not fit the network input.
ClassifierEval evaluate_classifier(const Network& net, const ImageSet& test);

}  // namespace nilm
