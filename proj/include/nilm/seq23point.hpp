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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nilm/ingest.hpp"
#include "nilm/state.hpp"
#include "nilm/training.hpp"
#include "nilm/windowing.hpp"

namespace nilm {

constexpr std::size_t kDefaultWindow = 1000;
constexpr std::size_t kDefaultHidden = 1300;
constexpr std::size_t kTargetSlots = 3;

/// The five 1-D convolutions, in order: (in, out, kernel) =
/// (1,30,10) (30,30,8) (30,40,6) (40,50,5) (50,50,5), stride 1, no padding, ReLU.
std::vector<ConvLayerSpec> seq23point_conv_specs();

/// 50 * (window - 29): the conv stack shortens a window by 29 samples.
std::size_t seq23point_flatten_width(std::size_t window);

/// flatten*hidden + hidden + hidden*3 + 3
std::size_t seq23point_head_parameter_count(std::size_t window, std::size_t hidden = kDefaultHidden);

/// Layers conv1..conv5, dense1 (flatten -> hidden, ReLU), dense2 (hidden -> 3).
Network build_seq23point_network(std::size_t window = kDefaultWindow,
                                 std::size_t hidden = kDefaultHidden);

/// Initialized network with MSE loss and Adam.
NetworkState build_seq23point(std::uint64_t seed, std::size_t window = kDefaultWindow,
                              std::size_t hidden = kDefaultHidden, double learning_rate = 0.001);

struct Seq23PointShape {
  std::size_t window = 0;
  std::size_t hidden = 0;
};

/// Recovers window and hidden width from a network, or throws ConfigError if
/// the layer stack is not a seq2-[3]point network.
Seq23PointShape check_seq23point(const Network& net);

FitResult train_appliance(NetworkState& state, const WindowBatch& data, const FitConfig& config);

/// Copies `base`, freezes the conv layers, re-initializes the dense head from
/// `config.seed`, resets the optimizer and trains on `data`.
NetworkState transfer_train(const NetworkState& base, const WindowBatch& data,
                            const FitConfig& config, FitResult* curve = nullptr);

// ---- inference ---------------------------------------------------------------

struct StitchedSeries {
  std::vector<double> values;          // mean of covering predictions
  std::vector<std::uint32_t> coverage; // predictions landing on each position

  bool covered(std::size_t i) const { return coverage[i] > 0; }
};

/// Averages 3-point window predictions back onto a series of length `n`.
StitchedSeries stitch_predictions(const Tensor& predictions, std::span<const std::size_t> starts,
                                  std::size_t window, std::size_t n);

StitchedSeries predict_series(const Network& net, std::span<const double> aggregate,
                              const WindowConfig& config);

// ---- threshold accuracy --------------------------------------------------------

struct EvalReport {
  std::string appliance;
  double tau = 0.0;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // percent
  std::vector<double> predicted;
  std::vector<double> truth;
};

/// A point is correct when |PD - GT| < tau.
EvalReport threshold_accuracy(std::span<const double> predicted, std::span<const double> truth,
                              double tau, std::string appliance = {});

/// Per-appliance thresholds in normalized units: dishwasher 0.05,
/// microwave 0.055, refrigerator 0.4, washer-dryer 0.025. Matching ignores
/// case, spaces, '-' and '_' and accepts the REDD spellings.
std::optional<double> appliance_threshold(std::string_view appliance);

/// Predicts every window and scores all three slots.
EvalReport evaluate_windows(const Network& net, const WindowBatch& data, double tau,
                            std::string appliance = {});

// ---- site NILM ------------------------------------------------------------------

struct SiteWindows {
  WindowBatch batch;               // normalized aggregate in, normalized aggregate slots out
  std::vector<SiteClass> labels;   // ground truth at each window's mid-point
};

SiteWindows build_site_windows(const SiteSeries& site, const NormStats& stats,
                               const WindowConfig& config);

struct SiteEvalReport {
  std::array<std::array<std::size_t, 4>, 4> confusion{};  // [truth][predicted]
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // percent
};

/// Denormalizes each normalized value with `stats` and classifies it.
SiteEvalReport site_confusion(std::span<const double> normalized,
                              std::span<const SiteClass> truth, const NormStats& stats);

/// Mid-slot prediction per window, denormalized and classified.
SiteEvalReport site_evaluate(const Network& net, const SiteWindows& test, const NormStats& stats);

}  // namespace nilm
