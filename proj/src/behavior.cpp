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

#include "nilm/behavior.hpp"

#include <cmath>
#include <numeric>

#include "nilm/error.hpp"
#include "text_util.hpp"

namespace nilm {

PowerSummary power_summary(const TimeSeries& series, const TimePeriod& period,
                           std::string appliance, std::string house) {
  if (period.end <= period.start) throw DataError("empty period");
  PowerSummary s{std::move(appliance), std::move(house), period, 0.0, 0.0, 0};
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto t = series.timestamps[i];
    if (t < period.start || t >= period.end) continue;
    const double v = series.values[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw DataError("reading at " + std::to_string(t) + " is negative or not finite");
    }
    s.max_watts = s.samples == 0 ? v : std::max(s.max_watts, v);
    sum += v;
    ++s.samples;
  }
  if (s.samples == 0) {
    throw DataError("no readings between " + std::to_string(period.start) + " and " +
                    std::to_string(period.end));
  }
  s.mean_watts = sum / static_cast<double>(s.samples);
  return s;
}

TimePeriod leading_days(const TimeSeries& series, double days) {
  if (series.empty()) throw DataError("empty series");
  if (!(days > 0.0)) throw ConfigError("days must be positive");
  const auto t0 = series.timestamps.front();
  return {t0, t0 + static_cast<std::int64_t>(std::llround(days * 86400.0))};
}

std::string_view transient_name(TransientState s) {
  switch (s) {
    case TransientState::stable: return "stable";
    case TransientState::minor_increase: return "minor_increase";
    case TransientState::minor_decrease: return "minor_decrease";
    case TransientState::large_increase: return "large_increase";
    case TransientState::large_decrease: return "large_decrease";
  }
  return "?";
}

std::size_t TransientHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), out_of_range);
}

TransientHistogram transient_histogram(std::span<const double> x, const TransientThresholds& th) {
  if (!(0.0 < th.minor && th.minor < th.large && th.large < th.ceiling)) {
    throw ConfigError("transient thresholds must increase");
  }
  TransientHistogram h;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double d = x[i] - x[i - 1];
    if (!std::isfinite(d)) throw DataError("non-finite reading near index " + std::to_string(i));
    const double a = std::abs(d);
    TransientState s;
    if (a < th.minor) {
      s = TransientState::stable;
    } else if (a < th.large) {
      s = d > 0 ? TransientState::minor_increase : TransientState::minor_decrease;
    } else if (a < th.ceiling) {
      s = d > 0 ? TransientState::large_increase : TransientState::large_decrease;
    } else {
      ++h.out_of_range;
      continue;
    }
    ++h.counts[static_cast<std::size_t>(s)];
  }
  return h;
}

void write_summary_csv(const std::vector<BehaviorRow>& rows, const std::filesystem::path& file) {
  std::string s = "house,appliance,start,end,samples,max_watts,mean_watts\n";
  for (const auto& r : rows) {
    const auto& p = r.summary;
    s += p.house + ',' + p.appliance + ',' + std::to_string(p.period.start) + ',' +
         std::to_string(p.period.end) + ',' + std::to_string(p.samples) + ',' + text::fixed(p.max_watts) +
         ',' + text::fixed(p.mean_watts) + '\n';
  }
  text::write_file(file, s);
}

void write_histogram_csv(const std::vector<BehaviorRow>& rows, const std::filesystem::path& file) {
  std::string s = "house,appliance,state,count\n";
  for (const auto& r : rows) {
    const std::string key = r.summary.house + ',' + r.summary.appliance + ',';
    for (std::size_t i = 0; i < kTransientStates; ++i) {
      s += key + std::string(transient_name(static_cast<TransientState>(i))) + ',' +
           std::to_string(r.histogram.counts[i]) + '\n';
    }
    s += key + "out_of_range," + std::to_string(r.histogram.out_of_range) + '\n';
  }
  text::write_file(file, s);
}

}  // namespace nilm
