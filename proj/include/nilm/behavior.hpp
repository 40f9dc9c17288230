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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nilm/ingest.hpp"

namespace nilm {

// Half-open [start, end) in UTC seconds.
struct TimePeriod {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

struct PowerSummary {
  std::string appliance;
  std::string house;
  TimePeriod period;
  double max_watts = 0.0;
  double mean_watts = 0.0;
  std::size_t samples = 0;
};

/// Max and mean over samples with timestamps inside the period. Throws
/// DataError when no sample falls inside or a reading is negative.
PowerSummary power_summary(const TimeSeries& series, const TimePeriod& period,
                           std::string appliance = {}, std::string house = {});

/// [first timestamp, first timestamp + days * 86400).
TimePeriod leading_days(const TimeSeries& series, double days);

enum class TransientState { stable, minor_increase, minor_decrease, large_increase, large_decrease };
constexpr std::size_t kTransientStates = 5;
std::string_view transient_name(TransientState s);

struct TransientThresholds {
  double minor = 3.0;
  double large = 10.0;
  double ceiling = 50.0;
};

struct TransientHistogram {
  std::array<std::size_t, kTransientStates> counts{};
  std::size_t out_of_range = 0;  // |d| >= ceiling

  std::size_t count(TransientState s) const { return counts[static_cast<std::size_t>(s)]; }
  std::size_t total() const;
  bool operator==(const TransientHistogram&) const = default;
};

/// Bands are closed on the left: |d| < 3 stable, 3 <= |d| < 10 minor,
/// 10 <= |d| < 50 large, anything above goes to out_of_range.
TransientHistogram transient_histogram(std::span<const double> readings,
                                       const TransientThresholds& thresholds = {});

struct BehaviorRow {
  PowerSummary summary;
  TransientHistogram histogram;
};

/// house,appliance,start,end,samples,max_watts,mean_watts
void write_summary_csv(const std::vector<BehaviorRow>& rows, const std::filesystem::path& file);
/// house,appliance,state,count with the out-of-range bucket last.
void write_histogram_csv(const std::vector<BehaviorRow>& rows, const std::filesystem::path& file);

}  // namespace nilm
