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
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nilm {

struct TimeSeries {
  std::vector<std::int64_t> timestamps;  // UTC seconds, strictly increasing
  std::vector<double> values;            // watts

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  void push(std::int64_t t, double v) {
    timestamps.push_back(t);
    values.push_back(v);
  }
};

struct ParseReport {
  std::size_t lines = 0;
  std::size_t parsed = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;

  void merge(const ParseReport& other);
};

// ---- REDD low-frequency layout -------------------------------------------

struct ReddHouse {
  std::map<int, TimeSeries> channels;
  std::map<int, std::string> labels;
  ParseReport report;
};

/// One "timestamp value" channel file. Fractional timestamps are floored to
/// whole seconds. Throws ParseError (with line) on non-increasing stamps.
TimeSeries parse_redd_channel(std::istream& in, const std::string& source, ParseReport& report);

/// Directory with labels.dat and channel_<n>.dat files.
ReddHouse parse_redd_house(const std::filesystem::path& dir);

// ---- REFIT cleaned CSV ---------------------------------------------------

struct RefitHouse {
  TimeSeries aggregate;
  std::vector<std::string> appliance_names;  // header order
  std::vector<TimeSeries> appliances;
  ParseReport report;
  double median_spacing = 0.0;  // seconds
};

RefitHouse parse_refit_house(std::istream& in, const std::string& source = "<stream>");
RefitHouse parse_refit_house(const std::filesystem::path& file);

// ---- synchronization -------------------------------------------------------

struct SyncedHouse {
  std::vector<std::int64_t> timestamps;
  std::vector<double> mains1;
  std::vector<double> mains2;
  std::vector<std::string> appliance_names;
  std::vector<std::vector<double>> appliances;
  std::map<int, std::string> labels;
  std::size_t mains1_gaps = 0;
  std::size_t mains2_gaps = 0;

  std::size_t rows() const { return timestamps.size(); }
  std::size_t column_count() const { return appliances.size() + 3; }
  const std::vector<double>& appliance(const std::string& name) const;
  std::vector<double> aggregate() const;
};

/// Channels labelled "mains" (case-insensitive) become mains1/mains2 in
/// channel order; every other channel is an appliance. Duplicate labels get a
/// "_<channel>" suffix.
SyncedHouse synchronize_house(const std::map<int, TimeSeries>& channels,
                              const std::map<int, std::string>& labels);

/// N+3 column CSV: timestamp, mains1, mains2, appliances...
void write_synced_csv(const SyncedHouse& house, const std::filesystem::path& file);
SyncedHouse read_synced_csv(const std::filesystem::path& file);

/// REFIT rows are already aligned: Aggregate becomes mains1, mains2 is zero.
SyncedHouse refit_synced(const RefitHouse& house);

// ---- pair files ----------------------------------------------------------

struct PairSeries {
  std::vector<double> aggregate;
  std::vector<double> appliance;

  std::size_t size() const { return aggregate.size(); }
};

struct PairSplit {
  PairSeries train;
  PairSeries test;
};

std::size_t split_point(std::size_t rows, double ratio);

PairSplit build_appliance_pair_file(const SyncedHouse& house, const std::string& appliance,
                                    double split_ratio);

void write_pair_csv(const PairSeries& pairs, const std::filesystem::path& file);
PairSeries read_pair_csv(const std::filesystem::path& file);

// ---- normalization ---------------------------------------------------------

struct NormStats {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Population statistics. Throws DataError for fewer than two samples or a
/// constant series.
NormStats compute_norm_stats(std::span<const double> series);
std::vector<double> normalize(std::span<const double> series, const NormStats& stats);
std::vector<double> denormalize(std::span<const double> series, const NormStats& stats);
inline double denormalize(double x, const NormStats& s) { return x * s.sigma + s.mu; }

void write_norm_stats(const NormStats& stats, const std::filesystem::path& file);
NormStats read_norm_stats(const std::filesystem::path& file);

// ---- site labels -----------------------------------------------------------

enum class SiteClass : std::uint8_t { A = 0, B = 1, C = 2, D = 3 };

constexpr double kSiteBoundB = 10.0;
constexpr double kSiteBoundC = 15.0;
constexpr double kSiteBoundD = 80.0;

/// [0,10) A, [10,15) B, [15,80) C, [80,inf) D.
SiteClass site_class(double watts);
std::vector<SiteClass> label_site_classes(std::span<const double> aggregate);
char site_class_letter(SiteClass c);
SiteClass parse_site_class(char letter);

struct SiteSeries {
  std::vector<double> aggregate;
  std::vector<double> appliance;
  std::vector<SiteClass> labels;

  std::size_t size() const { return aggregate.size(); }
};

SiteSeries build_site_series(const SyncedHouse& house, const std::string& appliance);
void write_site_csv(const SiteSeries& site, const std::filesystem::path& file);
SiteSeries read_site_csv(const std::filesystem::path& file);

// ---- synthetic houses --------------------------------------------------------

struct SynthAppliance {
  std::string name;
  std::vector<double> state_watts;  // 2..4 states
  std::size_t min_dwell = 20;       // samples spent in a state
  std::size_t max_dwell = 200;
};

struct SynthConfig {
  std::vector<SynthAppliance> appliances;
  double noise_level = 0.0;  // noise std as a fraction of the summed peak wattage
  std::size_t length = 1000;
  std::uint64_t seed = 0;
  std::int64_t start_time = 0;
  std::int64_t period = 1;
};

void validate(const SynthConfig& config);

/// Ground-truth appliance columns plus mains1 = clip0(sum + noise); mains2 is
/// all zero.
SyncedHouse synth_generate(const SynthConfig& config);

}  // namespace nilm
