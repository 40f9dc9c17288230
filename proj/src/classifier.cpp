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

#include "nilm/classifier.hpp"

#include <algorithm>
#include <set>

#include "nilm/error.hpp"
#include "nilm/training.hpp"
#include "text_util.hpp"

namespace nilm {

namespace fs = std::filesystem;

std::string_view classifier_name(ClassifierKind kind) {
  return kind == ClassifierKind::simple_dnn ? "simple-dnn" : "compact-cnn";
}

ClassifierKind parse_classifier(std::string_view name) {
  if (name == "simple-dnn") return ClassifierKind::simple_dnn;
  if (name == "compact-cnn") return ClassifierKind::compact_cnn;
  throw ConfigError("unknown model '" + std::string(name) + "' (simple-dnn or compact-cnn)");
}

std::string_view head_name(HeadPreset head) {
  switch (head) {
    case HeadPreset::resnet: return "resnet";
    case HeadPreset::alexnet: return "alexnet";
    case HeadPreset::densenet: return "densenet";
  }
  return "?";
}

HeadPreset parse_head(std::string_view name) {
  if (name == "resnet") return HeadPreset::resnet;
  if (name == "alexnet") return HeadPreset::alexnet;
  if (name == "densenet") return HeadPreset::densenet;
  throw ConfigError("unknown head '" + std::string(name) + "' (resnet, alexnet or densenet)");
}

DensePairs head_pairs(HeadPreset head) {
  switch (head) {
    case HeadPreset::resnet: return {{2500, 2000}, {2000, 1500}, {1500, 500}, {500, 20}};
    case HeadPreset::alexnet: return {{4096, 1024}, {1024, 20}};
    case HeadPreset::densenet: return {{1024, 512}, {512, 20}};
  }
  throw ConfigError("unknown head");
}

namespace {

NetworkState finish_state(Network net, std::uint64_t seed, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  NetworkState st;
  st.seed = seed;
  st.loss = LossKind::cross_entropy;
  st.network = std::move(net);
  st.network.initialize(seed);
  st.optimizer = Optimizer({OptimizerKind::sgd, lr}, st.network);
  return st;
}

}  // namespace

NetworkState build_simple_dnn(std::uint64_t seed, double lr, std::size_t classes, std::size_t height,
                              std::size_t width) {
  if (classes < 2) throw ConfigError("need at least two classes");
  Network net;
  net.add("dense1", DenseLayerSpec{height * width, 500, Activation::relu});
  net.add("dense2", DenseLayerSpec{500, 150, Activation::relu});
  net.add("dense3", DenseLayerSpec{150, classes, Activation::softmax});
  return finish_state(std::move(net), seed, lr);
}

NetworkState build_compact_cnn(const DensePairs& head, std::uint64_t seed, double lr, std::size_t height,
                               std::size_t width) {
  if (head.empty()) throw ConfigError("head has no dense layers");
  for (std::size_t i = 1; i < head.size(); ++i) {
    if (head[i].first != head[i - 1].second) {
      throw ConfigError("head pair " + std::to_string(i + 1) + " does not chain");
    }
  }
  if (head.back().second < 2) throw ConfigError("need at least two classes");
  if (height < 4 || width < 4) throw ShapeError("image too small for two 2x2 pools");
  Network net;
  net.add("conv1", Conv2dLayerSpec{1, 16, 3, 1, 1, Activation::relu});
  net.add("pool1", MaxPool2dSpec{2});
  net.add("conv2", Conv2dLayerSpec{16, 32, 3, 1, 1, Activation::relu});
  net.add("pool2", MaxPool2dSpec{2});
  const std::size_t flat = 32 * (height / 2 / 2) * (width / 2 / 2);
  net.add("proj", DenseLayerSpec{flat, head.front().first, Activation::relu});
  for (std::size_t i = 0; i < head.size(); ++i) {
    const bool last = i + 1 == head.size();
    net.add("fc" + std::to_string(i + 1),
            DenseLayerSpec{head[i].first, head[i].second, last ? Activation::softmax : Activation::relu});
  }
  return finish_state(std::move(net), seed, lr);
}

NetworkState build_compact_cnn(HeadPreset head, std::uint64_t seed, double lr, std::size_t height,
                               std::size_t width) {
  return build_compact_cnn(head_pairs(head), seed, lr, height, width);
}

// ---- class index -------------------------------------------------------------------

ClassIndex::ClassIndex(std::vector<std::string> labels, std::size_t slots) {
  std::set<std::string> uniq(labels.begin(), labels.end());
  uniq.erase(std::string(kUnknownClass));
  if (slots < 2) throw ConfigError("need at least two output slots");
  if (uniq.size() > slots - 1) {
    throw ConfigError(std::to_string(uniq.size()) + " classes do not fit " + std::to_string(slots) +
                      " outputs with one reserved for '" + std::string(kUnknownClass) + "'");
  }
  names_.assign(uniq.begin(), uniq.end());
  padding_ = slots - 1 - names_.size();
  for (std::size_t i = 0; i < padding_; ++i) names_.push_back("unused" + std::to_string(names_.size()));
  names_.emplace_back(kUnknownClass);
}

std::size_t ClassIndex::index_of(std::string_view label) const {
  const std::size_t n = known();
  const auto it = std::lower_bound(names_.begin(), names_.begin() + static_cast<std::ptrdiff_t>(n), label);
  if (it != names_.begin() + static_cast<std::ptrdiff_t>(n) && *it == label) {
    return static_cast<std::size_t>(it - names_.begin());
  }
  return unknown();
}

void ClassIndex::save(const fs::path& file) const {
  std::string s = "index,class\n";
  for (std::size_t i = 0; i < known(); ++i) s += std::to_string(i) + ',' + names_[i] + '\n';
  s += std::to_string(unknown()) + ',' + std::string(kUnknownClass) + '\n';
  text::write_file(file, s);
}

ClassIndex ClassIndex::load(const fs::path& file) {
  auto in = text::open_in(file);
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "index,class") {
    throw ParseError(file.string() + ": expected class index header", 1);
  }
  std::vector<std::string> labels;
  std::size_t unknown_at = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    const auto idx = f.size() == 2 ? text::to_int(f[0]) : std::nullopt;
    if (!idx || *idx < 0) throw ParseError(file.string() + ": bad class row", lineno);
    if (f[1] == kUnknownClass) {
      unknown_at = static_cast<std::size_t>(*idx);
    } else {
      if (static_cast<std::size_t>(*idx) != labels.size()) {
        throw ParseError(file.string() + ": class indices must be consecutive", lineno);
      }
      labels.emplace_back(f[1]);
    }
  }
  if (unknown_at < labels.size()) throw ParseError(file.string() + ": no reserved class row", lineno);
  ClassIndex ci(labels, unknown_at + 1);
  if (ci.known() != labels.size()) throw ParseError(file.string() + ": duplicate class names", lineno);
  return ci;
}

// ---- image sets ----------------------------------------------------------------------

namespace {

ImageSet pack(const std::vector<const Image*>& imgs, std::vector<std::size_t> labels,
              std::vector<std::string> ids) {
  if (imgs.empty()) throw DataError("no images");
  const std::size_t h = imgs[0]->height, w = imgs[0]->width;
  ImageSet s;
  s.inputs = Tensor(Shape{imgs.size(), 1, h, w});
  for (std::size_t n = 0; n < imgs.size(); ++n) {
    if (imgs[n]->height != h || imgs[n]->width != w) {
      throw ShapeError("image " + ids[n] + " is " + std::to_string(imgs[n]->height) + "x" +
                       std::to_string(imgs[n]->width) + ", expected " + std::to_string(h) + "x" +
                       std::to_string(w));
    }
    std::copy(imgs[n]->pixels.begin(), imgs[n]->pixels.end(), s.inputs.row(n).begin());
  }
  s.labels = std::move(labels);
  s.ids = std::move(ids);
  return s;
}

}  // namespace

ImageSet make_image_set(const std::vector<SpectrogramImage>& images, const ClassIndex& index) {
  std::vector<const Image*> imgs;
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;
  for (const auto& im : images) {
    imgs.push_back(&im.image);
    labels.push_back(index.index_of(im.label));
    ids.push_back(im.id);
  }
  return pack(imgs, std::move(labels), std::move(ids));
}

ImageSet load_image_set(const std::vector<ManifestEntry>& rows, const fs::path& root,
                        const ClassIndex& index, std::string_view split) {
  std::vector<Image> owned;
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;
  for (const auto& r : rows) {
    if (!split.empty() && r.split != split) continue;
    owned.push_back(read_png(root / r.path));
    labels.push_back(index.index_of(r.label));
    ids.push_back(r.id);
  }
  std::vector<const Image*> imgs;
  for (const auto& im : owned) imgs.push_back(&im);
  if (imgs.empty()) {
    throw DataError("manifest has no images" + (split.empty() ? std::string() : " in split '" + std::string(split) + "'"));
  }
  return pack(imgs, std::move(labels), std::move(ids));
}

// ---- training and evaluation -------------------------------------------------------------

std::vector<std::size_t> classify(const Network& net, const Tensor& inputs) {
  const Tensor probs = predict(net, inputs);
  std::vector<std::size_t> out(probs.dim(0));
  for (std::size_t n = 0; n < out.size(); ++n) {
    const auto r = probs.row(n);
    out[n] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

namespace {

std::size_t output_width(const Network& net, const Tensor& inputs) {
  try {
    return net.layer_output_shapes(inputs.shape()).back().back();
  } catch (const ShapeError& e) {
    throw ShapeError("image size " + std::to_string(inputs.dim(2)) + "x" + std::to_string(inputs.dim(3)) +
                     " does not fit the network: " + e.what());
  }
}

}  // namespace

ClassifierEval evaluate_classifier(const Network& net, const ImageSet& test) {
  if (test.size() == 0) throw DataError("empty test set");
  const std::size_t k = output_width(net, test.inputs);
  ClassifierEval ev;
  ev.predicted = classify(net, test.inputs);
  ev.matrix = confusion_from_pairs(test.labels, ev.predicted, k);
  ev.metrics = precision_recall_f1(ev.matrix);
  return ev;
}

ClassifierCurves train_classifier(NetworkState& state, const ImageSet& train, const ImageSet& test,
                                  const ClassifierConfig& cfg) {
  if (train.size() == 0) throw DataError("empty training set");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  const std::size_t k = output_width(state.network, train.inputs);
  std::set<std::size_t> seen(train.labels.begin(), train.labels.end());
  for (std::size_t c : train.labels) {
    if (c >= k) throw DataError("class index " + std::to_string(c) + " exceeds the output width");
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!seen.count(test.labels[i])) {
      throw DataError("test image " + test.ids[i] + " belongs to a class absent from the training split");
    }
  }
  if (test.size()) output_width(state.network, test.inputs);
  state.optimizer.set_learning_rate(cfg.learning_rate);

  Tensor targets(Shape{train.size()});
  for (std::size_t i = 0; i < train.size(); ++i) targets[i] = static_cast<double>(train.labels[i]);

  ClassifierCurves curves;
  FitConfig fc{cfg.epochs, cfg.batch_size, cfg.seed, true};
  const auto r = fit(state, train.inputs, targets, fc, [&](std::size_t, double) {
    if (test.size() == 0) return;
    const auto pred = classify(state.network, test.inputs);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == test.labels[i];
    curves.test_accuracy.push_back(accuracy_percent(ok, pred.size()));
  });
  curves.train_loss = r.epoch_loss;
  return curves;
}

}  // namespace nilm
