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

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "nilm/error.hpp"
#include "nilm/ingest.hpp"
#include "test_util.hpp"

namespace {

using namespace nilm;
using nilm::testing::TempDir;

void put(const std::filesystem::path& p, const std::string& body) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << body;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TimeSeries series(std::vector<std::int64_t> t, std::vector<double> v) { return {std::move(t), std::move(v)}; }

// ---- REDD -----------------------------------------------------------------------

TEST(Redd, ParsesDocumentedLine) {
  std::istringstream in("1303132964 245.0\n1303132965.7 12.5\n");
  ParseReport rep;
  const auto ts = parse_redd_channel(in, "ch", rep);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts.timestamps[0], 1303132964);
  EXPECT_EQ(ts.values[0], 245.0);
  EXPECT_EQ(ts.timestamps[1], 1303132965);
  EXPECT_EQ(rep.parsed, 2u);
  EXPECT_EQ(rep.skipped, 0u);
}

TEST(Redd, SkipsAndCountsMalformedLines) {
  std::istringstream in("10 1.0\ngarbage\n11 nan\n12 -4\n13\n14 2.0\n");
  ParseReport rep;
  const auto ts = parse_redd_channel(in, "ch", rep);
  EXPECT_EQ(ts.timestamps, (std::vector<std::int64_t>{10, 14}));
  EXPECT_EQ(rep.skipped, 4u);
  EXPECT_FALSE(rep.warnings.empty());
  for (double v : ts.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Redd, NonIncreasingTimestampNamesLine) {
  std::istringstream in("10 1\n11 1\n11 2\n");
  ParseReport rep;
  try {
    parse_redd_channel(in, "ch", rep);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Redd, EmptyChannelWarns) {
  std::istringstream in("");
  ParseReport rep;
  EXPECT_TRUE(parse_redd_channel(in, "ch", rep).empty());
  EXPECT_EQ(rep.warnings.size(), 1u);
}

TEST(Redd, HouseDirectory) {
  TempDir dir("redd");
  put(dir / "labels.dat", "1 mains\n2 mains\n5 refrigerator\n");
  put(dir / "channel_1.dat", "100 50\n103 60\n");
  put(dir / "channel_2.dat", "100 5\n");
  put(dir / "channel_5.dat", "100 1\n101 2\n102 3\n103 4\n");
  const auto h = parse_redd_house(dir.path());
  EXPECT_EQ(h.labels.at(5), "refrigerator");
  EXPECT_EQ(h.channels.size(), 3u);
  EXPECT_EQ(h.channels.at(5).size(), 4u);
  const auto s = synchronize_house(h.channels, h.labels);
  EXPECT_EQ(s.column_count(), 4u);
  EXPECT_EQ(s.mains1, (std::vector<double>{50, 0, 0, 60}));
  EXPECT_EQ(s.mains2, (std::vector<double>{5, 0, 0, 0}));
  EXPECT_EQ(s.mains1_gaps, 2u);
  EXPECT_EQ(s.mains2_gaps, 3u);
}

TEST(Redd, MissingLabelsFile) {
  TempDir dir("redd_nolabels");
  put(dir / "channel_1.dat", "1 1\n");
  EXPECT_THROW(parse_redd_house(dir.path()), DataError);
}

// ---- REFIT -----------------------------------------------------------------------

TEST(Refit, MapsColumnsByHeaderName) {
  std::istringstream in(
      "Time,Unix,Aggregate,Appliance1,Appliance2\n"
      "2013-10-09 13:06:17,1381323977,250,40,0\n"
      "2013-10-09 13:06:25,1381323985,260,41,3\n"
      "2013-10-09 13:06:33,1381323993,270,42,4\n");
  const auto h = parse_refit_house(in);
  ASSERT_EQ(h.aggregate.size(), 3u);
  EXPECT_EQ(h.aggregate.values[0], 250.0);
  EXPECT_EQ(h.appliance_names, (std::vector<std::string>{"Appliance1", "Appliance2"}));
  EXPECT_EQ(h.appliances[0].values[0], 40.0);
  EXPECT_EQ(h.appliances[1].values[2], 4.0);
  EXPECT_EQ(h.median_spacing, 8.0);
  EXPECT_TRUE(h.report.warnings.empty());
}

TEST(Refit, ReorderedHeaderAndBadRows) {
  std::istringstream in(
      "Appliance1,Aggregate,Unix\n"
      "1,100,10\n"
      "x,100,20\n"
      "3,300,30\n");
  const auto h = parse_refit_house(in);
  EXPECT_EQ(h.aggregate.values, (std::vector<double>{100, 300}));
  EXPECT_EQ(h.appliances[0].values, (std::vector<double>{1, 3}));
  EXPECT_EQ(h.report.skipped, 1u);
  // 20 s spacing is not REFIT's 8 s cadence
  EXPECT_GE(h.report.warnings.size(), 2u);
}

TEST(Refit, MissingUnixColumn) {
  std::istringstream in("Time,Aggregate\n1,2\n");
  EXPECT_THROW(parse_refit_house(in), ParseError);
}

// ---- synchronization -----------------------------------------------------------------

TEST(Sync, ZeroFillsAndDropsMains) {
  std::map<int, TimeSeries> ch{{1, series({0, 3, 7}, {10, 30, 70})}, {3, series({0, 1, 2, 3, 4}, {1, 2, 3, 4, 5})}};
  std::map<int, std::string> labels{{1, "mains"}, {3, "fridge"}};
  const auto s = synchronize_house(ch, labels);
  EXPECT_EQ(s.timestamps, (std::vector<std::int64_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(s.mains1, (std::vector<double>{10, 0, 0, 30, 0}));
  EXPECT_EQ(s.mains2, std::vector<double>(5, 0.0));
  EXPECT_EQ(s.appliance("fridge"), (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_EQ(s.mains1_gaps, 3u);
}

TEST(Sync, ColumnCountIsAppliancesPlusThree) {
  std::map<int, TimeSeries> ch;
  std::map<int, std::string> labels{{1, "mains"}, {2, "mains"}};
  ch[1] = series({0, 1}, {1, 1});
  ch[2] = series({0, 1}, {1, 1});
  for (int c = 3; c <= 6; ++c) {
    ch[c] = series({0, 1}, {0, 0});
    labels[c] = c == 6 ? "lighting" : "outlet";
  }
  const auto s = synchronize_house(ch, labels);
  EXPECT_EQ(s.column_count(), 7u);
  EXPECT_EQ(s.appliance_names, (std::vector<std::string>{"outlet_3", "outlet_4", "outlet_5", "lighting"}));
}

TEST(Sync, DisagreeingAppliancesFail) {
  std::map<int, TimeSeries> ch{{3, series({0, 1, 2}, {0, 0, 0})}, {4, series({0, 1, 5}, {0, 0, 0})}};
  std::map<int, std::string> labels{{3, "a"}, {4, "b"}};
  try {
    synchronize_house(ch, labels);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  EXPECT_THROW(synchronize_house({{1, series({0}, {1})}}, {{1, "mains"}}), ConfigError);
}

TEST(Sync, ConservationProperty) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    TimeSeries app, mains;
    std::int64_t t = 0;
    for (int i = 0; i < 200; ++i) {
      t += 1 + static_cast<std::int64_t>(rng() % 3);
      app.push(t, static_cast<double>(rng() % 100));
      if (rng() % 3 == 0) mains.push(t, 1.0 + static_cast<double>(rng() % 50));
      if (rng() % 5 == 0) mains.push(t + 1000000, 7.0);  // never in the reference
    }
    std::sort(mains.timestamps.begin(), mains.timestamps.end());
    const auto s = synchronize_house({{1, mains}, {2, app}}, {{1, "mains"}, {2, "kettle"}});
    EXPECT_EQ(s.timestamps, app.timestamps);
    std::size_t matched = 0;
    for (double v : s.mains1) matched += v != 0.0;
    EXPECT_EQ(matched + s.mains1_gaps, s.rows());
  }
}

TEST(Sync, CsvHasNPlusThreeColumns) {
  TempDir dir("sync_csv");
  std::map<int, TimeSeries> ch{{1, series({0, 1}, {10, 20})}, {2, series({0, 1}, {1.5, 2})}};
  const auto s = synchronize_house(ch, {{1, "mains"}, {2, "fridge"}});
  write_synced_csv(s, dir / "h.csv");
  EXPECT_EQ(slurp(dir / "h.csv"), "timestamp,mains1,mains2,fridge\n0,10.000000,0.000000,1.500000\n1,20.000000,0.000000,2.000000\n");
}

TEST(Sync, CsvReadsBack) {
  TempDir dir("sync_back");
  std::map<int, TimeSeries> ch{{1, series({5, 6, 7}, {10, 20, 30})}, {2, series({5, 6, 7}, {1.5, 2, 0.25})},
                               {3, series({5, 6, 7}, {0, 4, 8})}};
  const auto s = synchronize_house(ch, {{1, "mains"}, {2, "fridge"}, {3, "kettle"}});
  write_synced_csv(s, dir / "h.csv");
  const auto back = read_synced_csv(dir / "h.csv");
  EXPECT_EQ(back.timestamps, s.timestamps);
  EXPECT_EQ(back.mains1, s.mains1);
  EXPECT_EQ(back.appliance_names, s.appliance_names);
  EXPECT_EQ(back.appliance("kettle"), s.appliance("kettle"));
  put(dir / "bad.csv", "timestamp,mains1,mains2\n1,0,0\n1,0,0\n");
  try {
    read_synced_csv(dir / "bad.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Refit, AlignedRowsBecomeSyncedHouse) {
  std::istringstream in(
      "Unix,Aggregate,Appliance1,Appliance2\n"
      "8,250,40,0\n"
      "16,260,41,3\n");
  const auto s = refit_synced(parse_refit_house(in));
  EXPECT_EQ(s.column_count(), 5u);
  EXPECT_EQ(s.timestamps, (std::vector<std::int64_t>{8, 16}));
  EXPECT_EQ(s.mains1, (std::vector<double>{250, 260}));
  EXPECT_EQ(s.mains2, (std::vector<double>{0, 0}));
  EXPECT_EQ(s.appliance("Appliance2"), (std::vector<double>{0, 3}));
}

// ---- pairs and normalization ------------------------------------------------------------

TEST(Pairs, AggregateIsMainsSumAndSplitIsChronological) {
  SyncedHouse h;
  h.timestamps = {0, 1};
  h.mains1 = {10, 20};
  h.mains2 = {5, 5};
  h.appliance_names = {"fridge"};
  h.appliances = {{8, 9}};
  const auto p = build_appliance_pair_file(h, "fridge", 1.0);
  EXPECT_EQ(p.train.aggregate, (std::vector<double>{15, 25}));
  EXPECT_EQ(p.train.appliance, (std::vector<double>{8, 9}));
  EXPECT_THROW(build_appliance_pair_file(h, "toaster", 0.8), ConfigError);
  EXPECT_EQ(split_point(100, 0.8), 80u);
  EXPECT_EQ(split_point(10, 0.7), 7u);
  EXPECT_THROW(split_point(10, 1.2), ConfigError);
}

TEST(Pairs, CsvRoundTrip) {
  TempDir dir("pairs");
  PairSeries p{{1.25, 2.5, 1000.0}, {0.0, 1.0, 3.333333}};
  write_pair_csv(p, dir / "p.csv");
  EXPECT_EQ(slurp(dir / "p.csv").substr(0, 21), "aggregate,appliance\n1");
  const auto q = read_pair_csv(dir / "p.csv");
  EXPECT_EQ(q.aggregate, p.aggregate);
  EXPECT_EQ(q.appliance, p.appliance);
}

TEST(Norm, PopulationStatistics) {
  const std::vector<double> x{1, 2, 3};
  const auto s = compute_norm_stats(x);
  EXPECT_DOUBLE_EQ(s.mu, 2.0);
  EXPECT_NEAR(s.sigma, std::sqrt(2.0 / 3.0), 1e-15);
  const auto z = normalize(x, s);
  EXPECT_NEAR(z[0], -1.22474487139, 1e-10);
  EXPECT_EQ(z[1], 0.0);
  EXPECT_NEAR(z[2], 1.22474487139, 1e-10);
  EXPECT_THROW(compute_norm_stats(std::vector<double>{5, 5, 5}), DataError);
  EXPECT_THROW(compute_norm_stats(std::vector<double>{5}), DataError);
}

TEST(Norm, MatchesBruteForceAndRoundTrips) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 3000.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(50 + trial * 7);
    for (auto& v : x) v = u(rng);
    long double sum = 0, sq = 0;
    for (double v : x) sum += v;
    const long double mean = sum / x.size();
    for (double v : x) sq += (v - mean) * (v - mean);
    const auto s = compute_norm_stats(x);
    EXPECT_NEAR(s.mu, static_cast<double>(mean), 1e-9);
    EXPECT_NEAR(s.sigma, static_cast<double>(std::sqrt(sq / x.size())), 1e-9);
    const auto back = denormalize(normalize(x, s), s);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12 * std::abs(x[i]) + 1e-12);
  }
}

TEST(Norm, SidecarRoundTrip) {
  TempDir dir("norm");
  const NormStats s{123.456789, 0.5};
  write_norm_stats(s, dir / "n.csv");
  EXPECT_EQ(slurp(dir / "n.csv").substr(0, 9), "mu,sigma\n");
  const auto r = read_norm_stats(dir / "n.csv");
  EXPECT_EQ(r.mu, s.mu);
  EXPECT_EQ(r.sigma, s.sigma);
}

// ---- site classes ---------------------------------------------------------------------

TEST(Site, Thresholds) {
  EXPECT_EQ(site_class(5), SiteClass::A);
  EXPECT_EQ(site_class(50), SiteClass::C);
  EXPECT_EQ(site_class(80), SiteClass::D);
  EXPECT_EQ(site_class(10), SiteClass::B);
  EXPECT_EQ(site_class(15), SiteClass::C);
  EXPECT_EQ(site_class(0), SiteClass::A);
  EXPECT_EQ(site_class(std::nextafter(10.0, 0.0)), SiteClass::A);
  EXPECT_THROW(site_class(-1), DataError);
  EXPECT_THROW(site_class(std::nan("")), DataError);
}

TEST(Site, PartitionProperty) {
  // Exactly one class per value, monotone in wattage.
  SiteClass prev = SiteClass::A;
  for (double w = 0.0; w < 200.0; w += 0.125) {
    const SiteClass c = site_class(w);
    EXPECT_GE(static_cast<int>(c), static_cast<int>(prev));
    const int hits = (w < 10) + (w >= 10 && w < 15) + (w >= 15 && w < 80) + (w >= 80);
    EXPECT_EQ(hits, 1);
    EXPECT_EQ(static_cast<int>(c), (w >= 10) + (w >= 15) + (w >= 80));
    prev = c;
  }
  for (char l : {'A', 'B', 'C', 'D'}) EXPECT_EQ(site_class_letter(parse_site_class(l)), l);
  EXPECT_THROW(parse_site_class('E'), DataError);
}

TEST(Site, SeriesAndCsv) {
  TempDir dir("site");
  SyncedHouse h;
  h.timestamps = {0, 8, 16};
  h.mains1 = {5, 12, 90};
  h.mains2 = {0, 0, 0};
  h.appliance_names = {"computer"};
  h.appliances = {{1, 2, 60}};
  const auto s = build_site_series(h, "computer");
  EXPECT_EQ(s.labels, (std::vector<SiteClass>{SiteClass::A, SiteClass::B, SiteClass::D}));
  write_site_csv(s, dir / "s.csv");
  EXPECT_EQ(slurp(dir / "s.csv"),
            "aggregate,appliance,class\n5.000000,1.000000,A\n12.000000,2.000000,B\n90.000000,60.000000,D\n");
  const auto r = read_site_csv(dir / "s.csv");
  EXPECT_EQ(r.labels, s.labels);
  EXPECT_EQ(r.aggregate, s.aggregate);
}

// ---- synthetic ---------------------------------------------------------------------------

TEST(Synth, AdditivityWithoutNoise) {
  SynthConfig c;
  c.appliances = {{"fridge", {0, 100}, 5, 40}, {"kettle", {0, 50}, 5, 40}};
  c.length = 3000;
  c.seed = 3;
  const auto h = synth_generate(c);
  bool saw_both = false;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    EXPECT_EQ(h.mains1[i], h.appliances[0][i] + h.appliances[1][i]);
    EXPECT_EQ(h.mains2[i], 0.0);
    saw_both |= h.mains1[i] == 150.0;
  }
  EXPECT_TRUE(saw_both);
  EXPECT_EQ(h.column_count(), 5u);
}

TEST(Synth, DeterministicAndDwellBounds) {
  SynthConfig c;
  c.appliances = {{"a", {0, 10, 20}, 7, 9}};
  c.length = 2000;
  c.noise_level = 0.05;
  c.seed = 11;
  const auto a = synth_generate(c), b = synth_generate(c);
  EXPECT_EQ(a.mains1, b.mains1);
  EXPECT_EQ(a.appliances, b.appliances);
  c.seed = 12;
  EXPECT_NE(synth_generate(c).mains1, a.mains1);
  // run lengths, ignoring the truncated last run
  const auto& col = a.appliances[0];
  std::size_t run = 1;
  for (std::size_t i = 1; i < col.size(); ++i) {
    if (col[i] == col[i - 1]) {
      ++run;
    } else {
      EXPECT_GE(run, 7u);
      EXPECT_LE(run, 9u);
      run = 1;
    }
  }
  for (double v : a.mains1) EXPECT_GE(v, 0.0);
}

TEST(Synth, NoiseStdMatchesLevel) {
  SynthConfig c;
  c.appliances = {{"a", {1000, 1000.5}, 100, 100}};
  c.length = 20000;
  c.noise_level = 0.01;
  const auto h = synth_generate(c);
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double e = h.mains1[i] - h.appliances[0][i];
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(h.rows());
  EXPECT_NEAR(sum / n, 0.0, 0.5);
  EXPECT_NEAR(std::sqrt(sq / n), 0.01 * 1000.5, 0.3);
}

TEST(Synth, EmptyApplianceListGivesZeroAggregate) {
  SynthConfig c;
  c.length = 50;
  const auto h = synth_generate(c);
  EXPECT_EQ(h.mains1, std::vector<double>(50, 0.0));
  EXPECT_EQ(h.column_count(), 3u);
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig c;
  c.appliances = {{"a", {0}, 1, 2}};
  EXPECT_THROW(synth_generate(c), ConfigError);
  c.appliances = {{"a", {0, 1}, 5, 2}};
  EXPECT_THROW(synth_generate(c), ConfigError);
  c.appliances = {{"a", {0, 1}}, {"a", {0, 1}}};
  EXPECT_THROW(synth_generate(c), ConfigError);
  c.appliances = {{"a", {0, 1}}};
  c.noise_level = -1;
  EXPECT_THROW(synth_generate(c), ConfigError);
}

}  // namespace
