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

#include "nilm/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "nilm/error.hpp"
#include "nilm/tensor.hpp"
#include "text_util.hpp"

namespace nilm {

namespace fs = std::filesystem;

void ParseReport::merge(const ParseReport& other) {
  lines += other.lines;
  parsed += other.parsed;
  skipped += other.skipped;
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

// ---- REDD ---------------------------------------------------------------------

TimeSeries parse_redd_channel(std::istream& in, const std::string& source, ParseReport& report) {
  TimeSeries ts;
  std::string line;
  std::size_t lineno = 0, skipped = 0;
  while (std::getline(in, line)) {
    ++lineno;
    ++report.lines;
    const auto fields = text::split_ws(line);
    if (fields.empty()) continue;
    const auto t = text::to_double(fields[0]);
    const auto v = fields.size() == 2 ? text::to_double(fields[1]) : std::nullopt;
    if (!t || !v || *v < 0.0) {
      ++skipped;
      continue;
    }
    const auto stamp = static_cast<std::int64_t>(std::floor(*t));
    if (!ts.timestamps.empty() && stamp <= ts.timestamps.back()) {
      throw ParseError(source + ": timestamp " + std::to_string(stamp) +
                           " does not increase past " + std::to_string(ts.timestamps.back()),
                       lineno);
    }
    ts.push(stamp, *v);
  }
  report.parsed += ts.size();
  report.skipped += skipped;
  if (skipped > 0) {
    report.warnings.push_back(source + ": skipped " + std::to_string(skipped) +
                              " malformed line(s)");
  }
  if (ts.empty()) report.warnings.push_back(source + ": no readings");
  return ts;
}

ReddHouse parse_redd_house(const fs::path& dir) {
  const fs::path labels_file = dir / "labels.dat";
  if (!fs::exists(labels_file)) throw DataError("missing labels file " + labels_file.string());
  ReddHouse house;
  {
    auto in = text::open_in(labels_file);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto fields = text::split_ws(line);
      if (fields.empty()) continue;
      const auto ch = text::to_int(fields[0]);
      if (!ch || fields.size() < 2) throw ParseError("bad labels line in " + labels_file.string(), lineno);
      house.labels[static_cast<int>(*ch)] = std::string(fields[1]);
    }
  }
  const std::regex channel_re(R"(channel_(\d+)\.dat)");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, channel_re)) continue;
    const int ch = std::stoi(m[1]);
    auto in = text::open_in(entry.path());
    house.channels[ch] = parse_redd_channel(in, entry.path().string(), house.report);
  }
  for (const auto& [ch, label] : house.labels) {
    if (!house.channels.count(ch)) {
      house.report.warnings.push_back("label for channel " + std::to_string(ch) +
                                      " has no data file");
    }
  }
  return house;
}

// ---- REFIT --------------------------------------------------------------------

RefitHouse parse_refit_house(std::istream& in, const std::string& source) {
  RefitHouse house;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file", 1);
  const auto header = text::split(line, ',');
  std::ptrdiff_t unix_col = -1, agg_col = -1;
  std::vector<std::size_t> app_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = text::lower(header[i]);
    if (h == "unix") {
      unix_col = static_cast<std::ptrdiff_t>(i);
    } else if (h == "aggregate") {
      agg_col = static_cast<std::ptrdiff_t>(i);
    } else if (h.rfind("appliance", 0) == 0) {
      app_cols.push_back(i);
      house.appliance_names.emplace_back(header[i]);
    }
  }
  if (unix_col < 0) throw ParseError(source + ": header has no Unix column", 1);
  if (agg_col < 0) throw ParseError(source + ": header has no Aggregate column", 1);
  house.appliances.resize(app_cols.size());

  std::size_t lineno = 1;
  ParseReport& rep = house.report;
  while (std::getline(in, line)) {
    ++lineno;
    ++rep.lines;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    auto field = [&](std::size_t col) -> std::optional<double> {
      return col < f.size() ? text::to_double(f[col]) : std::nullopt;
    };
    const auto t = text::to_int(static_cast<std::size_t>(unix_col) < f.size() ? f[unix_col] : "");
    const auto agg = field(static_cast<std::size_t>(agg_col));
    bool ok = t && agg && *agg >= 0.0;
    std::vector<double> apps(app_cols.size());
    for (std::size_t k = 0; ok && k < app_cols.size(); ++k) {
      const auto v = field(app_cols[k]);
      ok = v && *v >= 0.0;
      if (ok) apps[k] = *v;
    }
    if (ok && !house.aggregate.empty() && *t <= house.aggregate.timestamps.back()) ok = false;
    if (!ok) {
      ++rep.skipped;
      continue;
    }
    house.aggregate.push(*t, *agg);
    for (std::size_t k = 0; k < apps.size(); ++k) house.appliances[k].push(*t, apps[k]);
    ++rep.parsed;
  }
  if (rep.skipped > 0) {
    rep.warnings.push_back(source + ": skipped " + std::to_string(rep.skipped) + " row(s)");
  }
  const auto& ts = house.aggregate.timestamps;
  if (ts.size() >= 2) {
    std::vector<std::int64_t> gaps(ts.size() - 1);
    for (std::size_t i = 1; i < ts.size(); ++i) gaps[i - 1] = ts[i] - ts[i - 1];
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    house.median_spacing = static_cast<double>(gaps[gaps.size() / 2]);
    if (std::abs(house.median_spacing - 8.0) > 2.0) {
      rep.warnings.push_back(source + ": median sample spacing " +
                             text::fixed(house.median_spacing, 1) + " s, expected about 8 s");
    }
  }
  return house;
}

RefitHouse parse_refit_house(const fs::path& file) {
  auto in = text::open_in(file);
  return parse_refit_house(in, file.string());
}

// ---- synchronization ----------------------------------------------------------

const std::vector<double>& SyncedHouse::appliance(const std::string& name) const {
  for (std::size_t i = 0; i < appliance_names.size(); ++i) {
    if (appliance_names[i] == name) return appliances[i];
  }
  throw ConfigError("unknown appliance '" + name + "'");
}

std::vector<double> SyncedHouse::aggregate() const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mains1[i] + mains2[i];
  return out;
}

namespace {

bool is_mains(const std::string& label) { return text::lower(label) == "mains"; }

// Reference-aligned column: readings whose stamp is absent are dropped, and
// stamps with no reading get 0.
std::vector<double> align(const std::vector<std::int64_t>& ref, const TimeSeries& ts,
                          std::size_t& gaps) {
  std::vector<double> out(ref.size(), 0.0);
  std::size_t j = 0;
  gaps = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    while (j < ts.size() && ts.timestamps[j] < ref[i]) ++j;
    if (j < ts.size() && ts.timestamps[j] == ref[i]) {
      out[i] = ts.values[j];
    } else {
      ++gaps;
    }
  }
  return out;
}

}  // namespace

SyncedHouse synchronize_house(const std::map<int, TimeSeries>& channels,
                              const std::map<int, std::string>& labels) {
  std::vector<int> mains, apps;
  for (const auto& [ch, ts] : channels) {
    auto it = labels.find(ch);
    if (it == labels.end()) throw ConfigError("channel " + std::to_string(ch) + " has no label");
    (is_mains(it->second) ? mains : apps).push_back(ch);
  }
  if (apps.empty()) throw ConfigError("house has no appliance channels");
  if (mains.size() > 2) throw ConfigError("more than two mains channels");

  SyncedHouse out;
  out.labels = labels;
  const TimeSeries& ref = channels.at(apps.front());
  out.timestamps = ref.timestamps;
  for (int ch : apps) {
    const TimeSeries& ts = channels.at(ch);
    const std::size_t n = std::min(ts.size(), ref.size());
    std::size_t div = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (ts.timestamps[i] != ref.timestamps[i]) {
        div = i;
        break;
      }
    }
    if (div < n || ts.size() != ref.size()) {
      std::ostringstream msg;
      msg << "appliance channels " << apps.front() << " and " << ch
          << " disagree on timestamps at row " << div;
      if (div < n) msg << " (" << ref.timestamps[div] << " vs " << ts.timestamps[div] << ")";
      else msg << " (lengths " << ref.size() << " vs " << ts.size() << ")";
      throw DataError(msg.str());
    }
  }

  std::set<std::string> seen, dup;
  for (int ch : apps) {
    if (!seen.insert(labels.at(ch)).second) dup.insert(labels.at(ch));
  }
  for (int ch : apps) {
    const std::string& l = labels.at(ch);
    out.appliance_names.push_back(dup.count(l) ? l + "_" + std::to_string(ch) : l);
    out.appliances.push_back(channels.at(ch).values);
  }

  const std::size_t rows = out.timestamps.size();
  out.mains1.assign(rows, 0.0);
  out.mains2.assign(rows, 0.0);
  out.mains1_gaps = out.mains2_gaps = rows;
  if (mains.size() >= 1) out.mains1 = align(out.timestamps, channels.at(mains[0]), out.mains1_gaps);
  if (mains.size() >= 2) out.mains2 = align(out.timestamps, channels.at(mains[1]), out.mains2_gaps);
  return out;
}

void write_synced_csv(const SyncedHouse& house, const fs::path& file) {
  std::string s = "timestamp,mains1,mains2";
  for (const auto& n : house.appliance_names) s += "," + n;
  s += '\n';
  for (std::size_t i = 0; i < house.rows(); ++i) {
    s += std::to_string(house.timestamps[i]);
    s += ',';
    text::append_fixed(s, house.mains1[i]);
    s += ',';
    text::append_fixed(s, house.mains2[i]);
    for (const auto& col : house.appliances) {
      s += ',';
      text::append_fixed(s, col[i]);
    }
    s += '\n';
  }
  text::write_file(file, s);
}

// ---- pair files -----------------------------------------------------------------

std::size_t split_point(std::size_t rows, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("split ratio must lie in [0, 1]");
  return std::min(rows, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(rows) + 1e-9)));
}

PairSplit build_appliance_pair_file(const SyncedHouse& house, const std::string& appliance,
                                    double split_ratio) {
  const auto& app = house.appliance(appliance);
  const auto agg = house.aggregate();
  const std::size_t cut = split_point(agg.size(), split_ratio);
  PairSplit out;
  out.train.aggregate.assign(agg.begin(), agg.begin() + cut);
  out.train.appliance.assign(app.begin(), app.begin() + cut);
  out.test.aggregate.assign(agg.begin() + cut, agg.end());
  out.test.appliance.assign(app.begin() + cut, app.end());
  return out;
}

void write_pair_csv(const PairSeries& pairs, const fs::path& file) {
  std::string s = "aggregate,appliance\n";
  s.reserve(pairs.size() * 24 + s.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    text::append_fixed(s, pairs.aggregate[i]);
    s += ',';
    text::append_fixed(s, pairs.appliance[i]);
    s += '\n';
  }
  text::write_file(file, s);
}

namespace {

template <typename RowFn>
void read_csv_rows(const fs::path& file, const std::string& expected_header, std::size_t columns,
                   RowFn&& fn) {
  auto in = text::open_in(file);
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != expected_header) {
    throw ParseError(file.string() + ": expected header '" + expected_header + "'", 1);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != columns) throw ParseError(file.string() + ": wrong column count", lineno);
    fn(f, lineno);
  }
}

double field_or_throw(std::string_view f, const fs::path& file, std::size_t lineno) {
  const auto v = text::to_double(f);
  if (!v) throw ParseError(file.string() + ": bad number '" + std::string(f) + "'", lineno);
  return *v;
}

}  // namespace

SyncedHouse read_synced_csv(const fs::path& file) {
  auto in = text::open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(file.string() + ": empty file", 1);
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 3 || header[0] != "timestamp" || header[1] != "mains1" || header[2] != "mains2") {
    throw ParseError(file.string() + ": expected header 'timestamp,mains1,mains2,...'", 1);
  }
  SyncedHouse h;
  for (std::size_t i = 3; i < header.size(); ++i) h.appliance_names.emplace_back(header[i]);
  h.appliances.resize(h.appliance_names.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != header.size()) throw ParseError(file.string() + ": wrong column count", lineno);
    const auto t = text::to_int(f[0]);
    if (!t) throw ParseError(file.string() + ": bad timestamp", lineno);
    if (!h.timestamps.empty() && *t <= h.timestamps.back()) {
      throw ParseError(file.string() + ": timestamps must increase", lineno);
    }
    h.timestamps.push_back(*t);
    h.mains1.push_back(field_or_throw(f[1], file, lineno));
    h.mains2.push_back(field_or_throw(f[2], file, lineno));
    for (std::size_t k = 0; k < h.appliances.size(); ++k) {
      h.appliances[k].push_back(field_or_throw(f[k + 3], file, lineno));
    }
  }
  return h;
}

SyncedHouse refit_synced(const RefitHouse& house) {
  SyncedHouse h;
  h.timestamps = house.aggregate.timestamps;
  h.mains1 = house.aggregate.values;
  h.mains2.assign(h.timestamps.size(), 0.0);
  h.appliance_names = house.appliance_names;
  for (const auto& a : house.appliances) h.appliances.push_back(a.values);
  return h;
}

PairSeries read_pair_csv(const fs::path& file) {
  PairSeries p;
  read_csv_rows(file, "aggregate,appliance", 2, [&](const auto& f, std::size_t ln) {
    p.aggregate.push_back(field_or_throw(f[0], file, ln));
    p.appliance.push_back(field_or_throw(f[1], file, ln));
  });
  return p;
}

// ---- normalization ----------------------------------------------------------------

NormStats compute_norm_stats(std::span<const double> series) {
  if (series.size() < 2) throw DataError("normalization needs at least two samples");
  require_finite(series, "series");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(series.size());
  if (!(var > 0.0)) throw DataError("constant series cannot be normalized (sigma = 0)");
  return {mean, std::sqrt(var)};
}

std::vector<double> normalize(std::span<const double> series, const NormStats& s) {
  if (!(s.sigma > 0.0)) throw DataError("sigma must be positive");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (series[i] - s.mu) / s.sigma;
  return out;
}

std::vector<double> denormalize(std::span<const double> series, const NormStats& s) {
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = series[i] * s.sigma + s.mu;
  return out;
}

void write_norm_stats(const NormStats& stats, const fs::path& file) {
  text::write_file(file, "mu,sigma\n" + text::exact(stats.mu) + "," + text::exact(stats.sigma) + "\n");
}

NormStats read_norm_stats(const fs::path& file) {
  NormStats s;
  bool got = false;
  read_csv_rows(file, "mu,sigma", 2, [&](const auto& f, std::size_t ln) {
    s.mu = field_or_throw(f[0], file, ln);
    s.sigma = field_or_throw(f[1], file, ln);
    got = true;
  });
  if (!got) throw ParseError(file.string() + ": no statistics row", 2);
  if (!(s.sigma > 0.0)) throw DataError(file.string() + ": sigma must be positive");
  return s;
}

// ---- site labels ------------------------------------------------------------------

SiteClass site_class(double watts) {
  if (!std::isfinite(watts)) throw DataError("site wattage is not finite");
  if (watts < 0.0) throw DataError("negative site wattage " + text::fixed(watts));
  if (watts < kSiteBoundB) return SiteClass::A;
  if (watts < kSiteBoundC) return SiteClass::B;
  if (watts < kSiteBoundD) return SiteClass::C;
  return SiteClass::D;
}

std::vector<SiteClass> label_site_classes(std::span<const double> aggregate) {
  std::vector<SiteClass> out(aggregate.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = site_class(aggregate[i]);
  return out;
}

char site_class_letter(SiteClass c) { return static_cast<char>('A' + static_cast<int>(c)); }

SiteClass parse_site_class(char letter) {
  if (letter < 'A' || letter > 'D') throw DataError(std::string("bad site class '") + letter + "'");
  return static_cast<SiteClass>(letter - 'A');
}

SiteSeries build_site_series(const SyncedHouse& house, const std::string& appliance) {
  SiteSeries s;
  s.aggregate = house.aggregate();
  s.appliance = house.appliance(appliance);
  s.labels = label_site_classes(s.aggregate);
  return s;
}

void write_site_csv(const SiteSeries& site, const fs::path& file) {
  std::string s = "aggregate,appliance,class\n";
  for (std::size_t i = 0; i < site.size(); ++i) {
    text::append_fixed(s, site.aggregate[i]);
    s += ',';
    text::append_fixed(s, site.appliance[i]);
    s += ',';
    s += site_class_letter(site.labels[i]);
    s += '\n';
  }
  text::write_file(file, s);
}

SiteSeries read_site_csv(const fs::path& file) {
  SiteSeries s;
  read_csv_rows(file, "aggregate,appliance,class", 3, [&](const auto& f, std::size_t ln) {
    s.aggregate.push_back(field_or_throw(f[0], file, ln));
    s.appliance.push_back(field_or_throw(f[1], file, ln));
    if (f[2].size() != 1) throw ParseError(file.string() + ": bad class field", ln);
    s.labels.push_back(parse_site_class(f[2][0]));
  });
  return s;
}

// ---- synthetic houses -------------------------------------------------------------------

void validate(const SynthConfig& c) {
  if (!(c.noise_level >= 0.0) || !std::isfinite(c.noise_level)) {
    throw ConfigError("noise level must be a non-negative number");
  }
  if (c.period < 1) throw ConfigError("sample period must be >= 1 s");
  std::set<std::string> names;
  for (const auto& a : c.appliances) {
    if (a.name.empty() || is_mains(a.name)) throw ConfigError("bad synthetic appliance name");
    if (!names.insert(a.name).second) throw ConfigError("duplicate appliance '" + a.name + "'");
    if (a.state_watts.size() < 2 || a.state_watts.size() > 4) {
      throw ConfigError(a.name + ": synthetic appliances have 2 to 4 states");
    }
    for (double w : a.state_watts) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(a.name + ": state watts must be >= 0");
    }
    if (a.min_dwell < 1 || a.max_dwell < a.min_dwell) {
      throw ConfigError(a.name + ": need 1 <= min_dwell <= max_dwell");
    }
  }
}

SyncedHouse synth_generate(const SynthConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  const std::size_t n = config.length;
  SyncedHouse h;
  h.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    h.timestamps[i] = config.start_time + static_cast<std::int64_t>(i) * config.period;
  }
  h.labels[1] = "mains";
  h.labels[2] = "mains";
  double peak_sum = 0.0;
  int channel = 3;
  for (const auto& a : config.appliances) {
    h.labels[channel++] = a.name;
    h.appliance_names.push_back(a.name);
    peak_sum += *std::max_element(a.state_watts.begin(), a.state_watts.end());
    std::vector<double> col(n);
    const std::size_t k = a.state_watts.size();
    std::uniform_int_distribution<std::size_t> dwell(a.min_dwell, a.max_dwell);
    std::size_t state = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    std::size_t i = 0;
    while (i < n) {
      const std::size_t len = std::min(dwell(rng), n - i);
      std::fill_n(col.begin() + static_cast<std::ptrdiff_t>(i), len, a.state_watts[state]);
      i += len;
      // next state uniformly among the others
      state = (state + 1 + std::uniform_int_distribution<std::size_t>(0, k - 2)(rng)) % k;
    }
    h.appliances.push_back(std::move(col));
  }
  h.mains1.assign(n, 0.0);
  h.mains2.assign(n, 0.0);
  const double sd = config.noise_level * peak_sum;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& col : h.appliances) sum += col[i];
    if (sd > 0.0) sum += sd * noise(rng);
    h.mains1[i] = std::max(0.0, sum);
  }
  return h;
}

}  // namespace nilm
