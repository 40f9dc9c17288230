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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nilm/signature.hpp"

namespace nilm {

/// 100 * correct / total. Throws DataError when total is 0 or correct > total.
double accuracy_percent(std::size_t correct, std::size_t total);

/// 2PR / (P + R), 0 when P + R == 0.
double f1_score(double precision, double recall);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return k_; }
  std::size_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * k_ + predicted]; }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * k_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted);
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(std::size_t truth) const;
  std::size_t column_sum(std::size_t predicted) const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_from_pairs(std::span<const std::size_t> truth,
                                     std::span<const std::size_t> predicted, std::size_t classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // TP + FP == 0
  bool recall_undefined = false;     // TP + FN == 0
  std::size_t support = 0;
};

struct MetricSet {
  double accuracy = 0.0;  // percent
  std::vector<ClassMetrics> per_class;
  // Mean F1 over classes that occur in the truth or the predictions.
  double macro_f1 = 0.0;
  std::size_t macro_classes = 0;
};

/// One-vs-rest precision, recall and F1 per class. Throws DataError on an
/// empty matrix.
MetricSet precision_recall_f1(const ConfusionMatrix& matrix);

/// Same numbers straight from (truth, prediction) pairs.
MetricSet metrics_from_pairs(std::span<const std::size_t> truth,
                             std::span<const std::size_t> predicted, std::size_t classes);

// ---- plot data -------------------------------------------------------------------

struct OverlayPayload {
  std::string title;
  std::vector<double> truth;
  std::vector<double> predicted;
};

struct BarPayload {
  std::string title;
  std::vector<std::string> labels;
  std::vector<double> values;
};

struct ConfusionPayload {
  std::string title;
  ConfusionMatrix matrix;
  std::vector<std::string> labels;  // one per class, may be empty
};

struct GridPayload {
  std::string title;
  std::vector<Image> images;
  std::vector<std::string> captions;
  std::size_t columns = 4;
};

struct PlotFiles {
  std::filesystem::path csv;
  std::filesystem::path svg;
};

/// Each writes <stem>.csv and <stem>.svg. Output bytes depend only on the
/// payload. Throws DataError on an empty payload.
PlotFiles emit_overlay(const OverlayPayload& payload, const std::filesystem::path& stem);
PlotFiles emit_bars(const BarPayload& payload, const std::filesystem::path& stem);
PlotFiles emit_confusion(const ConfusionPayload& payload, const std::filesystem::path& stem);
PlotFiles emit_grid(const GridPayload& payload, const std::filesystem::path& stem);

}  // namespace nilm
