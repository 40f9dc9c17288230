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

#include "nilm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nilm/error.hpp"
#include "text_util.hpp"

namespace nilm {

namespace fs = std::filesystem;

double accuracy_percent(std::size_t correct, std::size_t total) {
  if (total == 0) throw DataError("accuracy of zero samples is undefined");
  if (correct > total) throw DataError("correct count exceeds total");
  return static_cast<double>(correct) * 100.0 / static_cast<double>(total);
}

double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= k_ || predicted >= k_) throw DataError("class index out of range");
  ++at(truth, predicted);
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(truth, j);
  return s;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, predicted);
  return s;
}

ConfusionMatrix confusion_from_pairs(std::span<const std::size_t> truth,
                                     std::span<const std::size_t> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and predictions differ in length");
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
  return m;
}

namespace {

MetricSet finish(std::vector<std::size_t> tp, std::vector<std::size_t> fp,
                 std::vector<std::size_t> fn, std::size_t correct, std::size_t total) {
  if (total == 0) throw DataError("no samples to score");
  MetricSet m;
  m.accuracy = accuracy_percent(correct, total);
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    ClassMetrics cm;
    cm.support = tp[c] + fn[c];
    cm.precision_undefined = tp[c] + fp[c] == 0;
    cm.recall_undefined = tp[c] + fn[c] == 0;
    cm.precision = cm.precision_undefined ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
    cm.recall = cm.recall_undefined ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
    cm.f1 = f1_score(cm.precision, cm.recall);
    if (!(cm.precision_undefined && cm.recall_undefined)) {
      f1_sum += cm.f1;
      ++m.macro_classes;
    }
    m.per_class.push_back(cm);
  }
  m.macro_f1 = m.macro_classes ? f1_sum / static_cast<double>(m.macro_classes) : 0.0;
  return m;
}

}  // namespace

MetricSet precision_recall_f1(const ConfusionMatrix& matrix) {
  const std::size_t k = matrix.classes();
  if (k == 0) throw DataError("empty confusion matrix");
  std::vector<std::size_t> tp(k), fp(k), fn(k);
  for (std::size_t c = 0; c < k; ++c) {
    tp[c] = matrix.at(c, c);
    fp[c] = matrix.column_sum(c) - tp[c];
    fn[c] = matrix.row_sum(c) - tp[c];
  }
  return finish(tp, fp, fn, matrix.trace(), matrix.total());
}

MetricSet metrics_from_pairs(std::span<const std::size_t> truth,
                             std::span<const std::size_t> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and predictions differ in length");
  std::vector<std::size_t> tp(classes), fp(classes), fn(classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) throw DataError("class index out of range");
    if (truth[i] == predicted[i]) {
      ++tp[truth[i]];
      ++correct;
    } else {
      ++fp[predicted[i]];
      ++fn[truth[i]];
    }
  }
  return finish(tp, fp, fn, correct, truth.size());
}

// ---- plot data ---------------------------------------------------------------------

namespace {

constexpr double kPlotW = 640, kPlotH = 360, kMargin = 40;

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string num(double v) { return text::fixed(v, 2); }

std::string svg_open(double w, double h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + num(w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
}

PlotFiles write_pair(const fs::path& stem, const std::string& csv, const std::string& svg) {
  PlotFiles f{fs::path(stem.string() + ".csv"), fs::path(stem.string() + ".svg")};
  text::write_file(f.csv, csv);
  text::write_file(f.svg, svg);
  return f;
}

std::string polyline(const std::vector<double>& ys, double lo, double hi, const char* colour) {
  std::string pts;
  const double span = hi > lo ? hi - lo : 1.0;
  const double dx = ys.size() > 1 ? (kPlotW - 2 * kMargin) / static_cast<double>(ys.size() - 1) : 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double x = kMargin + dx * static_cast<double>(i);
    const double y = kPlotH - kMargin - (ys[i] - lo) / span * (kPlotH - 2 * kMargin);
    pts += num(x) + "," + num(y) + (i + 1 < ys.size() ? " " : "");
  }
  return std::string("<polyline fill=\"none\" stroke=\"") + colour + "\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
}

}  // namespace

PlotFiles emit_overlay(const OverlayPayload& p, const fs::path& stem) {
  if (p.truth.empty()) throw DataError("overlay payload is empty");
  if (p.truth.size() != p.predicted.size()) throw ShapeError("overlay series differ in length");
  std::string csv = "index,ground_truth,predicted\n";
  for (std::size_t i = 0; i < p.truth.size(); ++i) {
    csv += std::to_string(i) + "," + text::fixed(p.truth[i]) + "," + text::fixed(p.predicted[i]) + "\n";
  }
  double lo = p.truth[0], hi = p.truth[0];
  for (const auto* s : {&p.truth, &p.predicted}) {
    for (double v : *s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::string svg = svg_open(kPlotW, kPlotH, p.title);
  svg += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kPlotH - kMargin) + "\" x2=\"" + num(kPlotW - kMargin) +
         "\" y2=\"" + num(kPlotH - kMargin) + "\" stroke=\"black\"/>\n";
  svg += polyline(p.truth, lo, hi, "#1f77b4");
  svg += polyline(p.predicted, lo, hi, "#d62728");
  svg += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kPlotH - 10) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f77b4\">GT</text>\n";
  svg += "<text x=\"" + num(kMargin + 30) + "\" y=\"" + num(kPlotH - 10) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">PD</text>\n</svg>\n";
  return write_pair(stem, csv, svg);
}

PlotFiles emit_bars(const BarPayload& p, const fs::path& stem) {
  if (p.values.empty()) throw DataError("bar payload is empty");
  if (p.labels.size() != p.values.size()) throw ShapeError("bar labels and values differ in length");
  std::string csv = "label,value\n";
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    csv += csv_field(p.labels[i]) + "," + text::fixed(p.values[i]) + "\n";
  }
  const double top = std::max(1e-12, *std::max_element(p.values.begin(), p.values.end()));
  const double slot = (kPlotW - 2 * kMargin) / static_cast<double>(p.values.size());
  std::string svg = svg_open(kPlotW, kPlotH, p.title);
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double h = std::max(0.0, p.values[i]) / top * (kPlotH - 2 * kMargin - 10);
    const double x = kMargin + slot * static_cast<double>(i) + slot * 0.1;
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(kPlotH - kMargin - h) + "\" width=\"" + num(slot * 0.8) +
           "\" height=\"" + num(h) + "\" fill=\"#4c72b0\"/>\n";
    svg += "<text x=\"" + num(x + slot * 0.4) + "\" y=\"" + num(kPlotH - kMargin + 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + xml_escape(p.labels[i]) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return write_pair(stem, csv, svg);
}

PlotFiles emit_confusion(const ConfusionPayload& p, const fs::path& stem) {
  const std::size_t k = p.matrix.classes();
  if (k == 0 || p.matrix.total() == 0) throw DataError("confusion payload is empty");
  if (!p.labels.empty() && p.labels.size() != k) throw ShapeError("one label per class required");
  auto label = [&](std::size_t i) { return p.labels.empty() ? std::to_string(i) : p.labels[i]; };
  std::string csv = "truth";
  for (std::size_t j = 0; j < k; ++j) csv += "," + csv_field(label(j));
  csv += "\n";
  for (std::size_t i = 0; i < k; ++i) {
    csv += csv_field(label(i));
    for (std::size_t j = 0; j < k; ++j) csv += "," + std::to_string(p.matrix.at(i, j));
    csv += "\n";
  }
  const double cell = std::min(24.0, (kPlotH - 2 * kMargin) / static_cast<double>(k));
  const double size = 2 * kMargin + cell * static_cast<double>(k);
  std::size_t peak = 1;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) peak = std::max(peak, p.matrix.at(i, j));
  std::string svg = svg_open(size, size, p.title);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const int shade = 255 - static_cast<int>(std::lround(215.0 * static_cast<double>(p.matrix.at(i, j)) /
                                                           static_cast<double>(peak)));
      svg += "<rect x=\"" + num(kMargin + cell * static_cast<double>(j)) + "\" y=\"" +
             num(kMargin + cell * static_cast<double>(i)) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
             "\" fill=\"rgb(" + std::to_string(shade) + "," + std::to_string(shade) + ",255)\" stroke=\"#ccc\"/>\n";
    }
  }
  svg += "</svg>\n";
  return write_pair(stem, csv, svg);
}

PlotFiles emit_grid(const GridPayload& p, const fs::path& stem) {
  if (p.images.empty()) throw DataError("grid payload is empty");
  if (!p.captions.empty() && p.captions.size() != p.images.size()) {
    throw ShapeError("one caption per image required");
  }
  const std::size_t cols = std::max<std::size_t>(1, std::min(p.columns, p.images.size()));
  const std::size_t rows = (p.images.size() + cols - 1) / cols;
  const double scale = 3.0, pad = 20.0;
  const double cw = static_cast<double>(p.images[0].width) * scale + pad;
  const double ch = static_cast<double>(p.images[0].height) * scale + pad;
  std::string csv = "image,row,column,value\n";
  std::string svg = svg_open(cw * static_cast<double>(cols) + pad, ch * static_cast<double>(rows) + 30, p.title);
  for (std::size_t n = 0; n < p.images.size(); ++n) {
    const Image& img = p.images[n];
    const double ox = pad / 2 + cw * static_cast<double>(n % cols);
    const double oy = 30 + ch * static_cast<double>(n / cols);
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        const double v = img.at(y, x);
        csv += std::to_string(n) + "," + std::to_string(y) + "," + std::to_string(x) + "," + text::fixed(v) + "\n";
        const int g = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        svg += "<rect x=\"" + num(ox + scale * static_cast<double>(x)) + "\" y=\"" + num(oy + scale * static_cast<double>(y)) +
               "\" width=\"" + num(scale) + "\" height=\"" + num(scale) + "\" fill=\"rgb(" + std::to_string(g) + "," +
               std::to_string(g) + "," + std::to_string(g) + ")\"/>\n";
      }
    }
    if (!p.captions.empty()) {
      svg += "<text x=\"" + num(ox) + "\" y=\"" + num(oy + ch - 6) + "\" font-family=\"sans-serif\" font-size=\"10\">" +
             xml_escape(p.captions[n]) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return write_pair(stem, csv, svg);
}

}  // namespace nilm
