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

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "nilm/error.hpp"
#include "nilm/metrics.hpp"
#include "test_util.hpp"

namespace nilm {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(Accuracy, PublishedSiteCounts) {
  EXPECT_EQ(accuracy_percent(4860000, 6000000), 81.0);
  EXPECT_EQ(accuracy_percent(0, 17), 0.0);
  EXPECT_EQ(accuracy_percent(17, 17), 100.0);
  EXPECT_THROW(accuracy_percent(0, 0), DataError);
  EXPECT_THROW(accuracy_percent(5, 4), DataError);
}

TEST(F1, HarmonicMeanIdentities) {
  EXPECT_EQ(f1_score(0.5, 0.5), 0.5);
  EXPECT_EQ(f1_score(0.625, 0.625), 0.625);
  EXPECT_EQ(f1_score(0.75, 0.375), 0.5);
  EXPECT_EQ(f1_score(1.0, 0.25), 0.4);
  EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
  EXPECT_EQ(f1_score(1.0, 0.0), 0.0);
  EXPECT_EQ(f1_score(0.3, 0.6), f1_score(0.6, 0.3));
}

TEST(PrecisionRecall, BinaryEightyEight) {
  ConfusionMatrix m(2);
  m.at(0, 0) = 88;  // TP for class 0
  m.at(1, 0) = 12;  // FP
  m.at(0, 1) = 12;  // FN
  m.at(1, 1) = 88;
  const MetricSet s = precision_recall_f1(m);
  EXPECT_DOUBLE_EQ(s.per_class[0].precision, 0.88);
  EXPECT_DOUBLE_EQ(s.per_class[0].recall, 0.88);
  EXPECT_DOUBLE_EQ(s.per_class[0].f1, 0.88);
  EXPECT_DOUBLE_EQ(s.accuracy, 88.0);
  EXPECT_DOUBLE_EQ(s.macro_f1, 0.88);
}

TEST(PrecisionRecall, DiagonalIsPerfect) {
  ConfusionMatrix m(4);
  for (std::size_t i = 0; i < 4; ++i) m.at(i, i) = 3 + i;
  const MetricSet s = precision_recall_f1(m);
  for (const auto& c : s.per_class) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
  }
  EXPECT_EQ(s.macro_f1, 1.0);
  EXPECT_EQ(s.accuracy, 100.0);
}

TEST(PrecisionRecall, ZeroDenominatorsAreFlagged) {
  ConfusionMatrix m(3);
  m.at(0, 0) = 5;
  m.at(1, 0) = 2;  // class 1 is never predicted, class 2 never occurs
  const MetricSet s = precision_recall_f1(m);
  EXPECT_TRUE(s.per_class[1].precision_undefined);
  EXPECT_EQ(s.per_class[1].precision, 0.0);
  EXPECT_FALSE(s.per_class[1].recall_undefined);
  EXPECT_TRUE(s.per_class[2].precision_undefined);
  EXPECT_TRUE(s.per_class[2].recall_undefined);
  EXPECT_EQ(s.per_class[2].f1, 0.0);
  // class 2 appears nowhere, so it stays out of the macro average
  EXPECT_EQ(s.macro_classes, 2u);
  EXPECT_DOUBLE_EQ(s.macro_f1, (f1_score(5.0 / 7.0, 1.0) + 0.0) / 2.0);
  EXPECT_THROW(precision_recall_f1(ConfusionMatrix(3)), DataError);
}

TEST(PrecisionRecall, SymmetricErrorsGiveEqualPrecisionRecall) {
  // every class loses 2 to each other class and gains 2 from each
  ConfusionMatrix m(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) m.at(i, j) = i == j ? 10 + i : 2;
  const MetricSet s = precision_recall_f1(m);
  for (const auto& c : s.per_class) {
    EXPECT_DOUBLE_EQ(c.precision, c.recall);
    EXPECT_DOUBLE_EQ(c.f1, c.precision);
  }
}

// Metrics from a matrix match metrics straight from the pair list, and both
// match a brute-force count over the pairs.
TEST(MetricsProperty, MatrixEqualsPairsOnRandomData) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng() % 5, n = 1 + rng() % 60;
    std::vector<std::size_t> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng() % k;
      pred[i] = rng() % 3 == 0 ? truth[i] : rng() % k;
    }
    const ConfusionMatrix m = confusion_from_pairs(truth, pred, k);
    ASSERT_EQ(m.total(), n);
    const MetricSet a = precision_recall_f1(m);
    const MetricSet b = metrics_from_pairs(truth, pred, k);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += truth[i] == pred[i];
    EXPECT_DOUBLE_EQ(a.accuracy, 100.0 * static_cast<double>(m.trace()) / static_cast<double>(n));
    EXPECT_DOUBLE_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(m.trace(), correct);
    EXPECT_DOUBLE_EQ(a.macro_f1, b.macro_f1);
    EXPECT_EQ(a.macro_classes, b.macro_classes);
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += truth[i] == c && pred[i] == c;
        fp += truth[i] != c && pred[i] == c;
        fn += truth[i] == c && pred[i] != c;
      }
      const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
      const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
      EXPECT_DOUBLE_EQ(a.per_class[c].precision, p);
      EXPECT_DOUBLE_EQ(a.per_class[c].recall, r);
      EXPECT_DOUBLE_EQ(a.per_class[c].f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0);
      EXPECT_DOUBLE_EQ(b.per_class[c].f1, a.per_class[c].f1);
      EXPECT_EQ(a.per_class[c].support, m.row_sum(c));
      for (auto v : {a.per_class[c].precision, a.per_class[c].recall, a.per_class[c].f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(Confusion, PairErrors) {
  const std::vector<std::size_t> t = {0, 1}, p = {0};
  EXPECT_THROW(confusion_from_pairs(t, p, 2), ShapeError);
  const std::vector<std::size_t> bad = {0, 2};
  EXPECT_THROW(confusion_from_pairs(t, bad, 2), DataError);
}

TEST(PlotData, OverlayCsvAndChart) {
  testing::TempDir dir("plots");
  const auto f = emit_overlay({"fridge", {0.5, 1.0}, {0.25, 1.125}}, dir / "overlay");
  EXPECT_EQ(slurp(f.csv), "index,ground_truth,predicted\n0,0.500000,0.250000\n1,1.000000,1.125000\n");
  const std::string svg = slurp(f.svg);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_EQ(count_of(svg, "<polyline"), 2u);
  EXPECT_THROW(emit_overlay({"x", {}, {}}, dir / "empty"), DataError);
}

TEST(PlotData, FiveStateHistogramIsFiveBars) {
  testing::TempDir dir("bars");
  const BarPayload p{"transients",
                     {"stable", "minor_increase", "minor_decrease", "large_increase", "large_decrease"},
                     {40, 3, 2, 1, 1}};
  const auto f = emit_bars(p, dir / "hist");
  EXPECT_EQ(count_of(slurp(f.svg), "<rect x="), 5u);
  EXPECT_EQ(slurp(f.csv).substr(0, 28), "label,value\nstable,40.000000");
  EXPECT_THROW(emit_bars({"x", {}, {}}, dir / "empty"), DataError);
}

TEST(PlotData, IdenticalPayloadIdenticalBytes) {
  testing::TempDir dir("det");
  ConfusionMatrix m(2);
  m.at(0, 0) = 3;
  m.at(1, 0) = 1;
  const ConfusionPayload cp{"cm", m, {"a", "b"}};
  const auto a = emit_confusion(cp, dir / "a");
  const auto b = emit_confusion(cp, dir / "b");
  EXPECT_EQ(slurp(a.csv), slurp(b.csv));
  EXPECT_EQ(slurp(a.svg), slurp(b.svg));
  EXPECT_EQ(slurp(a.csv), "truth,a,b\na,3,0\nb,1,0\n");

  GridPayload g{"grid", {Image(2, 3, 0.25), Image(2, 3, 1.0)}, {"one", "two"}, 4};
  const auto g1 = emit_grid(g, dir / "g1");
  const auto g2 = emit_grid(g, dir / "g2");
  EXPECT_EQ(slurp(g1.svg), slurp(g2.svg));
  EXPECT_EQ(count_of(slurp(g1.csv), "\n"), 1u + 12u);
  EXPECT_THROW(emit_confusion({"x", ConfusionMatrix(2), {}}, dir / "e"), DataError);
  EXPECT_THROW(emit_grid({"x", {}, {}, 4}, dir / "e"), DataError);
}

}  // namespace
}  // namespace nilm
