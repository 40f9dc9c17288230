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

#include "nilm/seq23point.hpp"

#include <algorithm>
#include <cmath>

#include "nilm/error.hpp"
#include "text_util.hpp"

namespace nilm {

std::vector<ConvLayerSpec> seq23point_conv_specs() {
  return {
      {1, 30, 10, 1, 0, Activation::relu},
      {30, 30, 8, 1, 0, Activation::relu},
      {30, 40, 6, 1, 0, Activation::relu},
      {40, 50, 5, 1, 0, Activation::relu},
      {50, 50, 5, 1, 0, Activation::relu},
  };
}

std::size_t seq23point_flatten_width(std::size_t window) {
  std::size_t w = window;
  const auto specs = seq23point_conv_specs();
  for (const auto& s : specs) w = conv_output_size(w, s);
  return specs.back().out_channels * w;
}

std::size_t seq23point_head_parameter_count(std::size_t window, std::size_t hidden) {
  const std::size_t f = seq23point_flatten_width(window);
  return f * hidden + hidden + hidden * kTargetSlots + kTargetSlots;
}

Network build_seq23point_network(std::size_t window, std::size_t hidden) {
  if (hidden < 1) throw ConfigError("hidden width must be >= 1");
  const std::size_t flat = seq23point_flatten_width(window);
  Network net;
  const auto specs = seq23point_conv_specs();
  for (std::size_t i = 0; i < specs.size(); ++i) net.add("conv" + std::to_string(i + 1), specs[i]);
  net.add("dense1", DenseLayerSpec{flat, hidden, Activation::relu});
  net.add("dense2", DenseLayerSpec{hidden, kTargetSlots, Activation::none});
  return net;
}

NetworkState build_seq23point(std::uint64_t seed, std::size_t window, std::size_t hidden,
                              double learning_rate) {
  NetworkState st;
  st.seed = seed;
  st.loss = LossKind::mse;
  st.network = build_seq23point_network(window, hidden);
  st.network.initialize(seed);
  st.optimizer = Optimizer({OptimizerKind::adam, learning_rate}, st.network);
  return st;
}

Seq23PointShape check_seq23point(const Network& net) {
  const auto& layers = net.layers();
  const auto specs = seq23point_conv_specs();
  if (layers.size() != specs.size() + 2) {
    throw ConfigError("expected " + std::to_string(specs.size() + 2) + " layers, found " +
                      std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto* c = std::get_if<ConvLayerSpec>(&layers[i].spec);
    if (!c || *c != specs[i]) {
      throw ConfigError("layer " + layers[i].name + " does not match conv stage " +
                        std::to_string(i + 1));
    }
  }
  const auto* d1 = std::get_if<DenseLayerSpec>(&layers[specs.size()].spec);
  const auto* d2 = std::get_if<DenseLayerSpec>(&layers[specs.size() + 1].spec);
  if (!d1 || !d2 || d1->activation != Activation::relu || d2->in_features != d1->out_features ||
      d2->out_features != kTargetSlots) {
    throw ConfigError("dense head is not [flatten -> hidden (relu), hidden -> 3]");
  }
  const std::size_t per_channel = d1->in_features / specs.back().out_channels;
  if (per_channel * specs.back().out_channels != d1->in_features) {
    throw ConfigError("dense1 input width is not a multiple of the conv channel count");
  }
  return {per_channel + 29, d1->out_features};
}

namespace {

void check_batch_fits(const Network& net, const WindowBatch& data) {
  const Seq23PointShape shape = check_seq23point(net);
  if (data.rows() == 0) throw DataError("window batch is empty");
  if (data.inputs.dim(1) != shape.window) {
    throw ShapeError("windows have length " + std::to_string(data.inputs.dim(1)) +
                     ", network expects " + std::to_string(shape.window));
  }
}

}  // namespace

FitResult train_appliance(NetworkState& state, const WindowBatch& data, const FitConfig& config) {
  check_batch_fits(state.network, data);
  return fit(state, data.inputs, data.targets, config);
}

NetworkState transfer_train(const NetworkState& base, const WindowBatch& data,
                            const FitConfig& config, FitResult* curve) {
  check_batch_fits(base.network, data);
  NetworkState st;
  st.seed = config.seed;
  st.loss = LossKind::mse;
  st.network = base.network;
  st.network.set_trainable("*", true);
  st.network.set_trainable("conv", false);
  st.network.initialize(config.seed, "dense");
  OptimizerConfig oc = base.optimizer.config();
  oc.kind = OptimizerKind::adam;
  st.optimizer = Optimizer(oc, st.network);
  FitResult r = fit(st, data.inputs, data.targets, config);
  if (curve) *curve = std::move(r);
  return st;
}

// ---- inference ---------------------------------------------------------------------

StitchedSeries stitch_predictions(const Tensor& predictions, std::span<const std::size_t> starts,
                                  std::size_t window, std::size_t n) {
  if (predictions.rank() != 2 || predictions.dim(1) != kTargetSlots ||
      predictions.dim(0) != starts.size()) {
    throw ShapeError("predictions must be [windows, 3] aligned with window starts");
  }
  StitchedSeries out;
  out.values.assign(n, 0.0);
  out.coverage.assign(n, 0);
  const auto offs = target_offsets(window);
  for (std::size_t r = 0; r < starts.size(); ++r) {
    for (std::size_t k = 0; k < kTargetSlots; ++k) {
      const std::size_t pos = starts[r] + offs[k];
      if (pos >= n) throw ShapeError("window target lies outside the series");
      out.values[pos] += predictions.at(r, k);
      ++out.coverage[pos];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out.coverage[i] > 0) out.values[i] /= out.coverage[i];
  }
  return out;
}

StitchedSeries predict_series(const Network& net, std::span<const double> aggregate,
                              const WindowConfig& config) {
  const Seq23PointShape shape = check_seq23point(net);
  if (config.length != shape.window) {
    throw ConfigError("window length " + std::to_string(config.length) +
                      " does not match the network's " + std::to_string(shape.window));
  }
  std::vector<std::size_t> starts;
  const Tensor x = build_input_windows(aggregate, config, &starts);
  return stitch_predictions(predict(net, x), starts, config.length, aggregate.size());
}

// ---- threshold accuracy -------------------------------------------------------------

EvalReport threshold_accuracy(std::span<const double> predicted, std::span<const double> truth,
                              double tau, std::string appliance) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("PD has " + std::to_string(predicted.size()) + " points, GT has " +
                     std::to_string(truth.size()));
  }
  if (!(tau > 0.0)) throw ConfigError("threshold tau must be positive");
  if (predicted.empty()) throw DataError("nothing to evaluate");
  EvalReport r;
  r.appliance = std::move(appliance);
  r.tau = tau;
  r.total = predicted.size();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (std::abs(predicted[i] - truth[i]) < tau) ++r.correct;
  }
  r.accuracy = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.predicted.assign(predicted.begin(), predicted.end());
  r.truth.assign(truth.begin(), truth.end());
  return r;
}

std::optional<double> appliance_threshold(std::string_view appliance) {
  std::string key;
  for (char c : text::lower(appliance)) {
    if (c != ' ' && c != '-' && c != '_') key += c;
  }
  if (key == "dishwasher" || key == "dishwaser") return 0.05;
  if (key == "microwave") return 0.055;
  if (key == "refrigerator" || key == "fridge") return 0.4;
  if (key == "washerdryer" || key == "washerdrier") return 0.025;
  return std::nullopt;
}

EvalReport evaluate_windows(const Network& net, const WindowBatch& data, double tau,
                            std::string appliance) {
  check_batch_fits(net, data);
  const Tensor pd = predict(net, data.inputs);
  return threshold_accuracy(pd.values(), data.targets.values(), tau, std::move(appliance));
}

// ---- site NILM -----------------------------------------------------------------------

SiteWindows build_site_windows(const SiteSeries& site, const NormStats& stats,
                               const WindowConfig& config) {
  if (site.labels.size() != site.size()) throw ShapeError("site labels misaligned");
  const auto z = normalize(site.aggregate, stats);
  SiteWindows out;
  out.batch = build_windows(z, z, config);
  const std::size_t mid = mid_index(config.length);
  out.labels.reserve(out.batch.rows());
  for (auto s : out.batch.starts) out.labels.push_back(site.labels[s + mid]);
  return out;
}

SiteEvalReport site_confusion(std::span<const double> normalized, std::span<const SiteClass> truth,
                              const NormStats& stats) {
  if (normalized.size() != truth.size()) throw ShapeError("predictions and labels differ in length");
  if (!(stats.sigma > 0.0)) throw ConfigError("site statistics missing or invalid");
  if (normalized.empty()) throw DataError("nothing to evaluate");
  SiteEvalReport r;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    // Predictions below zero watts clamp into class A.
    const double watts = std::max(0.0, denormalize(normalized[i], stats));
    const auto p = static_cast<std::size_t>(site_class(watts));
    const auto t = static_cast<std::size_t>(truth[i]);
    ++r.confusion[t][p];
    if (p == t) ++r.correct;
  }
  r.total = normalized.size();
  r.accuracy = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

SiteEvalReport site_evaluate(const Network& net, const SiteWindows& test, const NormStats& stats) {
  check_batch_fits(net, test.batch);
  const Tensor pd = predict(net, test.batch.inputs);
  std::vector<double> mid(pd.dim(0));
  for (std::size_t r = 0; r < mid.size(); ++r) mid[r] = pd.at(r, 1);
  return site_confusion(mid, test.labels, stats);
}

}  // namespace nilm
