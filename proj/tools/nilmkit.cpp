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

// nilmkit: command-line front end for the pipeline stages.

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "nilm/behavior.hpp"
#include "nilm/classifier.hpp"
#include "nilm/error.hpp"
#include "nilm/ingest.hpp"
#include "nilm/metrics.hpp"
#include "nilm/seq23point.hpp"
#include "nilm/signature.hpp"
#include "nilm/windowing.hpp"
#include "run_context.hpp"

namespace fs = std::filesystem;
using nilmkit::json;
using nilmkit::RunContext;
using nilmkit::ValueKind;

namespace {

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& file, const std::string& body) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw nilm::DataError("cannot write " + file.string());
  out << body;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw nilm::DataError("cannot read " + file.string());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) lines.push_back(l);
  }
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_number(const std::string& s, const fs::path& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw nilm::ParseError(file.string() + ": bad number '" + s + "'", line);
}

nilm::WindowConfig window_config(const RunContext& ctx) {
  nilm::WindowConfig w;
  w.start = ctx.count("/windows/start");
  w.length = ctx.count("/windows/length");
  w.offset = ctx.count("/windows/offset");
  w.budget = ctx.count("/windows/budget");
  nilm::validate(w);
  return w;
}

nilm::FitConfig fit_config(const RunContext& ctx) {
  nilm::FitConfig f;
  f.epochs = ctx.count("/nilm/epochs");
  f.batch_size = ctx.count("/nilm/batch_size");
  f.seed = ctx.seed();
  if (f.batch_size == 0) throw nilm::ConfigError("/nilm/batch_size must be positive");
  return f;
}

// Norm stats travel next to a checkpoint.
fs::path aggregate_stats_path(const fs::path& ckpt) { return ckpt.string() + ".aggregate.norm"; }
fs::path appliance_stats_path(const fs::path& ckpt) { return ckpt.string() + ".appliance.norm"; }

void write_curve(RunContext& ctx, const std::vector<double>& loss, const std::string& name) {
  std::string s = "epoch,loss\n";
  for (std::size_t e = 0; e < loss.size(); ++e) s += std::to_string(e) + "," + fixed6(loss[e]) + "\n";
  write_text(ctx.output(name), s);
}

// ---- ingest ---------------------------------------------------------------------

void emit_ingest(RunContext& ctx, const nilm::SyncedHouse& house) {
  nilm::write_synced_csv(house, ctx.output("synced.csv"));
  std::string summary = "rows," + std::to_string(house.rows()) + "\n";
  summary += "mains1_gaps," + std::to_string(house.mains1_gaps) + "\n";
  summary += "mains2_gaps," + std::to_string(house.mains2_gaps) + "\n";
  for (const auto& n : house.appliance_names) summary += "appliance," + n + "\n";
  write_text(ctx.output("ingest_summary.csv"), summary);
  if (!ctx.has("/ingest/appliance")) return;

  const std::string app = ctx.text("/ingest/appliance");
  const double ratio = ctx.real("/ingest/split_ratio");
  const auto split = nilm::build_appliance_pair_file(house, app, ratio);
  nilm::write_pair_csv(split.train, ctx.output("pairs_train.csv"));
  nilm::write_pair_csv(split.test, ctx.output("pairs_test.csv"));

  const auto site = nilm::build_site_series(house, app);
  const std::size_t cut = nilm::split_point(site.size(), ratio);
  nilm::SiteSeries a, b;
  for (std::size_t i = 0; i < site.size(); ++i) {
    auto& dst = i < cut ? a : b;
    dst.aggregate.push_back(site.aggregate[i]);
    dst.appliance.push_back(site.appliance[i]);
    dst.labels.push_back(site.labels[i]);
  }
  nilm::write_site_csv(a, ctx.output("site_train.csv"));
  nilm::write_site_csv(b, ctx.output("site_test.csv"));
}

void ingest_redd(RunContext& ctx) {
  const auto raw = nilm::parse_redd_house(ctx.input("/ingest/house"));
  ctx.log("redd: " + std::to_string(raw.report.parsed) + " readings, " +
          std::to_string(raw.report.skipped) + " skipped");
  emit_ingest(ctx, nilm::synchronize_house(raw.channels, raw.labels));
}

void ingest_refit(RunContext& ctx) {
  emit_ingest(ctx, nilm::refit_synced(nilm::parse_refit_house(ctx.input("/ingest/file"))));
}

void ingest_synth(RunContext& ctx) {
  const json& j = ctx.at("/ingest/synth");
  nilm::SynthConfig sc;
  sc.length = ctx.count("/ingest/synth/length");
  sc.noise_level = ctx.real("/ingest/synth/noise_level");
  sc.period = static_cast<std::int64_t>(ctx.count("/ingest/synth/period"));
  sc.start_time = static_cast<std::int64_t>(ctx.count("/ingest/synth/start_time"));
  sc.seed = ctx.seed();
  try {
    for (const auto& a : j.at("appliances")) {
      nilm::SynthAppliance app;
      app.name = a.at("name").get<std::string>();
      app.state_watts = a.at("states").get<std::vector<double>>();
      app.min_dwell = a.value("min_dwell", app.min_dwell);
      app.max_dwell = a.value("max_dwell", app.max_dwell);
      sc.appliances.push_back(app);
    }
  } catch (const json::exception& e) {
    throw nilm::ConfigError(std::string("/ingest/synth/appliances: ") + e.what());
  }
  nilm::validate(sc);
  emit_ingest(ctx, nilm::synth_generate(sc));
}

// ---- windows --------------------------------------------------------------------

void windows_cmd(RunContext& ctx) {
  const auto pairs = nilm::read_pair_csv(ctx.input("/windows/pairs"));
  const auto as = nilm::compute_norm_stats(pairs.aggregate);
  const auto ps = nilm::compute_norm_stats(pairs.appliance);
  const auto agg = nilm::normalize(pairs.aggregate, as);
  const auto app = nilm::normalize(pairs.appliance, ps);
  const auto wc = window_config(ctx);
  const auto batch = nilm::build_windows(agg, app, wc);
  nilm::write_window_cache(batch, nilm::window_cache_key(wc, agg, app), ctx.output("windows.bin"));
  nilm::write_norm_stats(as, ctx.output("aggregate.norm"));
  nilm::write_norm_stats(ps, ctx.output("appliance.norm"));
  std::string s = "window,start,target_first,target_mid,target_last\n";
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    s += std::to_string(r) + "," + std::to_string(batch.starts[r]);
    for (std::size_t k = 0; k < 3; ++k) s += "," + fixed6(batch.targets.at(r, k));
    s += "\n";
  }
  write_text(ctx.output("windows_index.csv"), s);
}

// ---- nilm -----------------------------------------------------------------------

struct PreparedPairs {
  nilm::NormStats aggregate;
  nilm::NormStats appliance;
  nilm::WindowBatch batch;
};

PreparedPairs prepare_pairs(const RunContext& ctx, const nilm::PairSeries& pairs,
                            const nilm::NormStats* agg_stats = nullptr,
                            const nilm::NormStats* app_stats = nullptr) {
  PreparedPairs p;
  p.aggregate = agg_stats ? *agg_stats : nilm::compute_norm_stats(pairs.aggregate);
  p.appliance = app_stats ? *app_stats : nilm::compute_norm_stats(pairs.appliance);
  p.batch = nilm::build_windows(nilm::normalize(pairs.aggregate, p.aggregate),
                                nilm::normalize(pairs.appliance, p.appliance), window_config(ctx));
  return p;
}

void save_model(RunContext& ctx, const nilm::NetworkState& state, const PreparedPairs& p,
                const nilm::FitResult& curve) {
  const fs::path ckpt = ctx.output("model.ckpt");
  nilm::save_checkpoint(state, ckpt);
  nilm::write_norm_stats(p.aggregate, aggregate_stats_path(ckpt));
  nilm::write_norm_stats(p.appliance, appliance_stats_path(ckpt));
  ctx.record(aggregate_stats_path(ckpt));
  ctx.record(appliance_stats_path(ckpt));
  write_curve(ctx, curve.epoch_loss, "train_loss.csv");
}

void nilm_train(RunContext& ctx) {
  const auto p = prepare_pairs(ctx, nilm::read_pair_csv(ctx.input("/nilm/pairs")));
  auto state = nilm::build_seq23point(ctx.seed(), ctx.count("/windows/length"),
                                      ctx.count("/nilm/hidden"), ctx.real("/nilm/learning_rate"));
  ctx.log("training on " + std::to_string(p.batch.rows()) + " windows");
  const auto curve = nilm::train_appliance(state, p.batch, fit_config(ctx));
  save_model(ctx, state, p, curve);
}

void nilm_transfer(RunContext& ctx) {
  const auto base = nilm::load_checkpoint(ctx.input("/nilm/base"));
  const auto shape = nilm::check_seq23point(base.network);
  if (shape.window != ctx.count("/windows/length"))
    throw nilm::ConfigError("base model window is " + std::to_string(shape.window) +
                            " but /windows/length is " +
                            std::to_string(ctx.count("/windows/length")));
  const auto p = prepare_pairs(ctx, nilm::read_pair_csv(ctx.input("/nilm/pairs")));
  nilm::FitResult curve;
  const auto state = nilm::transfer_train(base, p.batch, fit_config(ctx), &curve);
  save_model(ctx, state, p, curve);
}

double resolve_tau(const RunContext& ctx) {
  if (ctx.has("/nilm/tau")) return ctx.real("/nilm/tau");
  if (ctx.has("/nilm/appliance")) {
    if (auto t = nilm::appliance_threshold(ctx.text("/nilm/appliance"))) return *t;
    throw nilm::ConfigError("no default threshold for appliance '" + ctx.text("/nilm/appliance") +
                            "', pass --tau");
  }
  throw nilm::ConfigError("eval needs --tau or --appliance");
}

void nilm_eval(RunContext& ctx) {
  const fs::path ckpt = ctx.input("/nilm/ckpt");
  const auto state = nilm::load_checkpoint(ckpt);
  const auto shape = nilm::check_seq23point(state.network);
  const auto as = nilm::read_norm_stats(aggregate_stats_path(ckpt));
  const auto ps = nilm::read_norm_stats(appliance_stats_path(ckpt));
  const double tau = resolve_tau(ctx);
  if (shape.window != ctx.count("/windows/length"))
    throw nilm::ConfigError("checkpoint window is " + std::to_string(shape.window) +
                            " but /windows/length is " +
                            std::to_string(ctx.count("/windows/length")));
  const auto p = prepare_pairs(ctx, nilm::read_pair_csv(ctx.input("/nilm/pairs")), &as, &ps);
  const std::string app = ctx.has("/nilm/appliance") ? ctx.text("/nilm/appliance") : "";
  const auto rep = nilm::evaluate_windows(state.network, p.batch, tau, app);

  std::string s = "window,slot,pd,gt,d\n";
  for (std::size_t i = 0; i < rep.predicted.size(); ++i) {
    s += std::to_string(i / 3) + "," + std::to_string(i % 3) + "," + fixed6(rep.predicted[i]) + "," +
         fixed6(rep.truth[i]) + "," + fixed6(std::abs(rep.predicted[i] - rep.truth[i])) + "\n";
  }
  write_text(ctx.output("eval_points.csv"), s);
  std::string summary;
  summary += "appliance: " + (app.empty() ? std::string("-") : app) + "\n";
  summary += "tau: " + fixed6(tau) + " (normalized units)\n";
  summary += "points: " + std::to_string(rep.total) + "\n";
  summary += "correct: " + std::to_string(rep.correct) + "\n";
  summary += "accuracy: " + fixed6(rep.accuracy) + "\n";
  write_text(ctx.output("eval_summary.txt"), summary);
  std::cout << summary;
}

void nilm_site_train(RunContext& ctx) {
  const auto site = nilm::read_site_csv(ctx.input("/nilm/site"));
  const auto stats = nilm::compute_norm_stats(site.aggregate);
  const auto sw = nilm::build_site_windows(site, stats, window_config(ctx));
  auto state = nilm::build_seq23point(ctx.seed(), ctx.count("/windows/length"),
                                      ctx.count("/nilm/hidden"), ctx.real("/nilm/learning_rate"));
  const auto curve = nilm::train_appliance(state, sw.batch, fit_config(ctx));
  const fs::path ckpt = ctx.output("site_model.ckpt");
  nilm::save_checkpoint(state, ckpt);
  nilm::write_norm_stats(stats, ctx.output("site_model.ckpt.aggregate.norm"));
  write_curve(ctx, curve.epoch_loss, "train_loss.csv");
}

std::vector<std::string> site_labels() { return {"A", "B", "C", "D"}; }

void nilm_site_eval(RunContext& ctx) {
  const fs::path ckpt = ctx.input("/nilm/ckpt");
  const auto state = nilm::load_checkpoint(ckpt);
  const fs::path stats_file =
      ctx.has("/nilm/stats") ? ctx.input("/nilm/stats") : aggregate_stats_path(ckpt);
  if (!fs::exists(stats_file)) throw nilm::ConfigError("input does not exist: " + stats_file.string());
  const auto stats = nilm::read_norm_stats(stats_file);
  const auto site = nilm::read_site_csv(ctx.input("/nilm/site"));
  const auto sw = nilm::build_site_windows(site, stats, window_config(ctx));
  const auto rep = nilm::site_evaluate(state.network, sw, stats);

  nilm::ConfusionMatrix m(4);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t p = 0; p < 4; ++p) m.at(t, p) = rep.confusion[t][p];
  const auto files = nilm::emit_confusion({"site classes", m, site_labels()}, ctx.out_dir() / "site_confusion");
  ctx.record(files.csv);
  ctx.record(files.svg);
  std::string summary = "windows: " + std::to_string(rep.total) + "\ncorrect: " +
                        std::to_string(rep.correct) + "\naccuracy: " + fixed6(rep.accuracy) + "\n";
  write_text(ctx.output("site_summary.txt"), summary);
  std::cout << summary;
}

// ---- signatures -----------------------------------------------------------------

nilm::SignatureConfig signature_config(const RunContext& ctx) {
  nilm::SignatureConfig c;
  c.sliding.max_points = ctx.count("/signatures/max_points");
  c.sliding.offset = ctx.count("/signatures/offset");
  c.sliding.max_iterations = ctx.count("/signatures/max_iterations");
  c.cwt.min_scale = ctx.count("/signatures/min_scale");
  c.cwt.max_scale = ctx.count("/signatures/max_scale");
  c.stft.segment = ctx.count("/signatures/segment");
  c.stft.hop = ctx.count("/signatures/hop");
  const std::string w = ctx.text("/signatures/window");
  if (w == "hann") {
    c.stft.window = nilm::WindowFunction::hann;
  } else if (w == "rectangular") {
    c.stft.window = nilm::WindowFunction::rectangular;
  } else {
    throw nilm::ConfigError("/signatures/window must be hann or rectangular");
  }
  c.height = ctx.count("/signatures/height");
  c.width = ctx.count("/signatures/width");
  nilm::validate(c.sliding);
  nilm::validate(c.cwt);
  nilm::validate(c.stft);
  return c;
}

void record_manifest_images(RunContext& ctx, const std::vector<nilm::ManifestEntry>& rows) {
  for (const auto& r : rows) ctx.record(ctx.out_dir() / r.path);
}

void signatures_generate(RunContext& ctx) {
  const auto house = nilm::read_synced_csv(ctx.input("/signatures/synced"));
  const auto cfg = signature_config(ctx);
  const auto kind = nilm::parse_transform(ctx.text("/signatures/transform"));
  std::vector<std::string> wanted = ctx.at("/signatures/appliances").get<std::vector<std::string>>();
  if (wanted.empty()) wanted = house.appliance_names;

  std::vector<nilm::SpectrogramImage> images;
  for (const auto& name : wanted) {
    const auto it = std::find(house.appliance_names.begin(), house.appliance_names.end(), name);
    if (it == house.appliance_names.end()) throw nilm::ConfigError("no appliance column '" + name + "'");
    const int channel = static_cast<int>(it - house.appliance_names.begin()) + 3;
    const nilm::Provenance src{ctx.text("/signatures/house"), channel, 0};
    if (kind == nilm::TransformKind::fused) {
      auto w = nilm::sliding_spectrogram_dataset(house.appliance(name), src, name,
                                                 nilm::TransformKind::wavelet, cfg);
      auto s = nilm::sliding_spectrogram_dataset(house.appliance(name), src, name,
                                                 nilm::TransformKind::stft, cfg);
      for (std::size_t i = 0; i < w.size(); ++i) images.push_back(nilm::fuse_images(w[i], s[i]));
    } else {
      auto v = nilm::sliding_spectrogram_dataset(house.appliance(name), src, name, kind, cfg);
      images.insert(images.end(), v.begin(), v.end());
    }
    ctx.log(name + ": " + std::to_string(images.size()) + " images so far");
  }
  const auto rows = nilm::store_images(images, ctx.out_dir() / "images");
  std::vector<nilm::ManifestEntry> rel = rows;
  for (auto& r : rel) r.path = (fs::path("images") / r.path).generic_string();
  nilm::write_manifest(rel, ctx.output("manifest.csv"));
  record_manifest_images(ctx, rel);
}

void signatures_split(RunContext& ctx) {
  const fs::path manifest = ctx.input("/signatures/manifest");
  const auto rows = nilm::read_manifest(manifest);
  if (rows.empty()) throw nilm::DataError("manifest " + manifest.string() + " has no rows");
  std::vector<nilm::SpectrogramImage> images;
  std::set<std::string> classes;
  for (const auto& r : rows) {
    nilm::SpectrogramImage s;
    s.image = nilm::read_png(manifest.parent_path() / r.path);
    s.kind = r.kind;
    s.label = r.label;
    s.source = r.source;
    s.original = r.original;
    s.id = r.id;
    s.parent = r.parent;
    images.push_back(std::move(s));
    classes.insert(r.label);
  }
  nilm::SplitConfig sc;
  sc.train_per_class = ctx.count("/signatures/train") / classes.size();
  sc.test_per_class = ctx.count("/signatures/test") / classes.size();
  sc.augmentation_budget = ctx.real("/signatures/augmentation_budget");
  sc.ranges.max_rotation_degrees = ctx.real("/signatures/max_rotation_degrees");
  sc.ranges.max_shear = ctx.real("/signatures/max_shear");
  sc.ranges.min_crop_fraction = ctx.real("/signatures/min_crop_fraction");
  sc.seed = ctx.seed();
  const auto split = nilm::split_train_test(images, sc);

  // rows come back as <split>/<id>.png
  const auto train = nilm::store_images(split.train, ctx.out_dir(), "train");
  const auto test = nilm::store_images(split.test, ctx.out_dir(), "test");
  std::vector<nilm::ManifestEntry> all = train;
  all.insert(all.end(), test.begin(), test.end());
  nilm::write_manifest(all, ctx.output("split_manifest.csv"));
  record_manifest_images(ctx, all);
}

// ---- classify -------------------------------------------------------------------

nilm::ClassIndex class_index_for(const std::vector<nilm::ManifestEntry>& rows) {
  std::set<std::string> labels;
  for (const auto& r : rows)
    if (r.split.empty() || r.split == "train") labels.insert(r.label);
  return nilm::ClassIndex({labels.begin(), labels.end()});
}

void classify_train(RunContext& ctx) {
  const fs::path manifest = ctx.input("/classify/manifest");
  const auto rows = nilm::read_manifest(manifest);
  const auto index = class_index_for(rows);
  const bool has_split = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.split.empty(); });
  const auto train = nilm::load_image_set(rows, manifest.parent_path(), index, has_split ? "train" : "");
  const auto test = has_split ? nilm::load_image_set(rows, manifest.parent_path(), index, "test")
                              : nilm::ImageSet{};
  if (train.size() == 0) throw nilm::DataError("no training images in " + manifest.string());
  const std::size_t h = train.inputs.shape()[2], w = train.inputs.shape()[3];

  const auto model = nilm::parse_classifier(ctx.text("/classify/model"));
  const double lr = ctx.real("/classify/learning_rate");
  nilm::NetworkState state =
      model == nilm::ClassifierKind::simple_dnn
          ? nilm::build_simple_dnn(ctx.seed(), lr, index.slots(), h, w)
          : nilm::build_compact_cnn(nilm::parse_head(ctx.text("/classify/head")), ctx.seed(), lr, h, w);
  nilm::ClassifierConfig cc;
  cc.epochs = ctx.count("/classify/epochs");
  cc.batch_size = ctx.count("/classify/batch_size");
  cc.learning_rate = lr;
  cc.seed = ctx.seed();
  const auto curves = nilm::train_classifier(state, train, test, cc);

  const fs::path ckpt = ctx.output("classifier.ckpt");
  nilm::save_checkpoint(state, ckpt);
  index.save(ctx.output("classifier.ckpt.classes"));
  std::string s = "epoch,loss,test_accuracy\n";
  for (std::size_t e = 0; e < curves.train_loss.size(); ++e) {
    s += std::to_string(e) + "," + fixed6(curves.train_loss[e]) + ",";
    if (e < curves.test_accuracy.size()) s += fixed6(curves.test_accuracy[e]);
    s += "\n";
  }
  write_text(ctx.output("classifier_curve.csv"), s);
}

void classify_eval(RunContext& ctx) {
  const fs::path ckpt = ctx.input("/classify/ckpt");
  const auto state = nilm::load_checkpoint(ckpt);
  const fs::path classes = ckpt.string() + ".classes";
  if (!fs::exists(classes)) throw nilm::ConfigError("input does not exist: " + classes.string());
  const auto index = nilm::ClassIndex::load(classes);
  const fs::path manifest = ctx.input("/classify/manifest");
  const auto rows = nilm::read_manifest(manifest);
  const bool has_split = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.split.empty(); });
  const auto test = nilm::load_image_set(rows, manifest.parent_path(), index, has_split ? "test" : "");
  if (test.size() == 0) throw nilm::DataError("no test images in " + manifest.string());
  const auto ev = nilm::evaluate_classifier(state.network, test);

  const auto files = nilm::emit_confusion({"classifier", ev.matrix, index.names()}, ctx.out_dir() / "confusion");
  ctx.record(files.csv);
  ctx.record(files.svg);
  std::string s = "class,precision,recall,f1,support,precision_undefined,recall_undefined\n";
  for (std::size_t c = 0; c < ev.metrics.per_class.size(); ++c) {
    const auto& m = ev.metrics.per_class[c];
    s += index.name(c) + "," + fixed6(m.precision) + "," + fixed6(m.recall) + "," + fixed6(m.f1) + "," +
         std::to_string(m.support) + "," + (m.precision_undefined ? "1" : "0") + "," +
         (m.recall_undefined ? "1" : "0") + "\n";
  }
  write_text(ctx.output("metrics.csv"), s);
  const std::string summary = "images: " + std::to_string(test.size()) +
                              "\naccuracy: " + fixed6(ev.metrics.accuracy) +
                              "\nmacro_f1: " + fixed6(ev.metrics.macro_f1) +
                              "\nmacro_classes: " + std::to_string(ev.metrics.macro_classes) + "\n";
  write_text(ctx.output("metrics_summary.txt"), summary);
  std::cout << summary;
}

// ---- behavior -------------------------------------------------------------------

void behavior_cmd(RunContext& ctx) {
  const auto house = nilm::read_synced_csv(ctx.input("/behavior/synced"));
  if (!ctx.has("/behavior/appliance")) throw nilm::ConfigError("missing required input /behavior/appliance");
  const std::string app = ctx.text("/behavior/appliance");
  nilm::TimeSeries ts{house.timestamps, house.appliance(app)};
  const auto period = nilm::leading_days(ts, ctx.real("/behavior/days"));

  nilm::BehaviorRow row;
  row.summary = nilm::power_summary(ts, period, app, ctx.text("/behavior/house"));
  std::vector<double> in_period;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts.timestamps[i] >= period.start && ts.timestamps[i] < period.end) in_period.push_back(ts.values[i]);
  nilm::TransientThresholds th;
  th.minor = ctx.real("/behavior/minor");
  th.large = ctx.real("/behavior/large");
  th.ceiling = ctx.real("/behavior/ceiling");
  row.histogram = nilm::transient_histogram(in_period, th);
  nilm::write_summary_csv({row}, ctx.output("behavior_summary.csv"));
  nilm::write_histogram_csv({row}, ctx.output("behavior_histogram.csv"));
}

// ---- report ---------------------------------------------------------------------

std::size_t column_of(const std::vector<std::string>& header, const std::string& name, const fs::path& f) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw nilm::ParseError(f.string() + ": no column '" + name + "'", 1);
  return static_cast<std::size_t>(it - header.begin());
}

void report_cmd(RunContext& ctx) {
  if (!ctx.has("/report/kind")) throw nilm::ConfigError("missing required input /report/kind");
  const std::string kind = ctx.text("/report/kind");
  const fs::path in = ctx.input("/report/input");
  const auto lines = read_lines(in);
  if (lines.empty()) throw nilm::DataError(in.string() + " is empty");
  const auto header = split_csv(lines[0]);
  std::string title = ctx.text("/report/title");
  if (title.empty()) title = in.stem().string();
  nilm::PlotFiles files;

  if (kind == "overlay") {
    const auto pd = column_of(header, "pd", in), gt = column_of(header, "gt", in);
    nilm::OverlayPayload p{title, {}, {}};
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto f = split_csv(lines[i]);
      if (f.size() != header.size()) throw nilm::ParseError(in.string() + ": wrong field count", i + 1);
      p.predicted.push_back(to_number(f[pd], in, i + 1));
      p.truth.push_back(to_number(f[gt], in, i + 1));
    }
    files = nilm::emit_overlay(p, ctx.out_dir() / "overlay");
  } else if (kind == "histogram") {
    const auto st = column_of(header, "state", in), cnt = column_of(header, "count", in);
    nilm::BarPayload p{title, {}, {}};
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto f = split_csv(lines[i]);
      if (f.size() != header.size()) throw nilm::ParseError(in.string() + ": wrong field count", i + 1);
      const auto it = std::find(p.labels.begin(), p.labels.end(), f[st]);
      const double v = to_number(f[cnt], in, i + 1);
      if (it == p.labels.end()) {
        p.labels.push_back(f[st]);
        p.values.push_back(v);
      } else {
        p.values[static_cast<std::size_t>(it - p.labels.begin())] += v;
      }
    }
    files = nilm::emit_bars(p, ctx.out_dir() / "histogram");
  } else if (kind == "confusion") {
    if (header.empty() || header[0] != "truth") throw nilm::ParseError(in.string() + ": expected a truth column", 1);
    const std::size_t k = header.size() - 1;
    if (lines.size() != k + 1) throw nilm::ParseError(in.string() + ": matrix is not square", lines.size());
    nilm::ConfusionPayload p{title, nilm::ConfusionMatrix(k), {header.begin() + 1, header.end()}};
    for (std::size_t r = 0; r < k; ++r) {
      const auto f = split_csv(lines[r + 1]);
      if (f.size() != k + 1) throw nilm::ParseError(in.string() + ": wrong field count", r + 2);
      for (std::size_t c = 0; c < k; ++c) {
        const double v = to_number(f[c + 1], in, r + 2);
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
          throw nilm::ParseError(in.string() + ": counts must be whole numbers", r + 2);
        p.matrix.at(r, c) = static_cast<std::size_t>(v);
      }
    }
    files = nilm::emit_confusion(p, ctx.out_dir() / "confusion_report");
  } else {
    throw nilm::ConfigError("/report/kind must be overlay, histogram or confusion");
  }
  ctx.record(files.csv);
  ctx.record(files.svg);
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const nilm::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const nilm::ParseError*>(&e)) return "parse";
  if (dynamic_cast<const nilm::ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const nilm::DataError*>(&e)) return "data";
  if (dynamic_cast<const nilm::Error*>(&e)) return "runtime";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nilmkit: load disaggregation, appliance signatures and behavior reports"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_file;
  nilmkit::Bindings bind;
  app.add_option("--config", config_file, "JSON config; explicit flags override it");
  bind.add(&app, "--seed", "/seed", ValueKind::integer, "Global seed");
  bind.add(&app, "--out", "/out", ValueKind::text, "Output directory");

  std::map<CLI::App*, std::pair<std::string, std::function<void(RunContext&)>>> handlers;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, const std::string& label,
                  std::function<void(RunContext&)> fn) {
    CLI::App* s = parent->add_subcommand(name, help);
    s->fallthrough();
    handlers[s] = {label, std::move(fn)};
    return s;
  };

  auto* ingest = app.add_subcommand("ingest", "Parse and synchronize a house");
  ingest->fallthrough();
  ingest->require_subcommand(1);
  bind.add(ingest, "--appliance", "/ingest/appliance", ValueKind::text, "Also write pair and site files");
  bind.add(ingest, "--split", "/ingest/split_ratio", ValueKind::real, "Train fraction");
  auto* redd = leaf(ingest, "redd", "REDD low-frequency house directory", "ingest redd", ingest_redd);
  bind.add(redd, "--house", "/ingest/house", ValueKind::text, "House directory");
  auto* refit = leaf(ingest, "refit", "REFIT cleaned CSV", "ingest refit", ingest_refit);
  bind.add(refit, "--file", "/ingest/file", ValueKind::text, "House CSV");
  auto* synth = leaf(ingest, "synth", "Seeded synthetic house", "ingest synth", ingest_synth);
  bind.add(synth, "--length", "/ingest/synth/length", ValueKind::integer, "Samples");
  bind.add(synth, "--noise", "/ingest/synth/noise_level", ValueKind::real, "Noise std over summed peaks");

  auto* windows = leaf(&app, "windows", "Cut normalized training windows", "windows", windows_cmd);
  bind.add(windows, "--pairs", "/windows/pairs", ValueKind::text, "Pair CSV");

  auto* nilm_cmd = app.add_subcommand("nilm", "Seq2-[3]point disaggregation");
  nilm_cmd->fallthrough();
  nilm_cmd->require_subcommand(1);
  for (auto* target : {nilm_cmd, windows}) {
    bind.add(target, "--window", "/windows/length", ValueKind::integer, "Window length");
    bind.add(target, "--offset", "/windows/offset", ValueKind::integer, "Window step");
    bind.add(target, "--budget", "/windows/budget", ValueKind::integer, "Maximum windows");
  }
  bind.add(nilm_cmd, "--hidden", "/nilm/hidden", ValueKind::integer, "Dense width");
  bind.add(nilm_cmd, "--epochs", "/nilm/epochs", ValueKind::integer, "Epochs");
  bind.add(nilm_cmd, "--batch", "/nilm/batch_size", ValueKind::integer, "Batch size");
  bind.add(nilm_cmd, "--lr", "/nilm/learning_rate", ValueKind::real, "Adam learning rate");
  auto* ntrain = leaf(nilm_cmd, "train", "Train on a pair CSV", "nilm train", nilm_train);
  bind.add(ntrain, "--pairs", "/nilm/pairs", ValueKind::text, "Pair CSV");
  auto* ntransfer = leaf(nilm_cmd, "transfer", "Retrain the dense head of a base model", "nilm transfer", nilm_transfer);
  bind.add(ntransfer, "--base", "/nilm/base", ValueKind::text, "Base checkpoint");
  bind.add(ntransfer, "--pairs", "/nilm/pairs", ValueKind::text, "Pair CSV");
  auto* neval = leaf(nilm_cmd, "eval", "Threshold accuracy on a pair CSV", "nilm eval", nilm_eval);
  bind.add(neval, "--ckpt", "/nilm/ckpt", ValueKind::text, "Checkpoint");
  bind.add(neval, "--pairs", "/nilm/pairs", ValueKind::text, "Pair CSV");
  bind.add(neval, "--tau", "/nilm/tau", ValueKind::real, "Threshold in normalized units");
  bind.add(neval, "--appliance", "/nilm/appliance", ValueKind::text, "Appliance name; picks a default tau");
  auto* strain = leaf(nilm_cmd, "site-train", "Train a site model on a site CSV", "nilm site-train", nilm_site_train);
  bind.add(strain, "--site", "/nilm/site", ValueKind::text, "Site CSV");
  auto* seval = leaf(nilm_cmd, "site-eval", "Four-class site accuracy", "nilm site-eval", nilm_site_eval);
  bind.add(seval, "--ckpt", "/nilm/ckpt", ValueKind::text, "Checkpoint");
  bind.add(seval, "--site", "/nilm/site", ValueKind::text, "Site CSV");
  bind.add(seval, "--stats", "/nilm/stats", ValueKind::text, "Aggregate norm stats");

  auto* sig = app.add_subcommand("signatures", "Spectrogram images");
  sig->fallthrough();
  sig->require_subcommand(1);
  auto* sgen = leaf(sig, "generate", "Images from a synced CSV", "signatures generate", signatures_generate);
  bind.add(sgen, "--synced", "/signatures/synced", ValueKind::text, "Synced CSV");
  bind.add(sgen, "--transform", "/signatures/transform", ValueKind::text, "wavelet|stft|fused");
  bind.add(sgen, "--house", "/signatures/house", ValueKind::text, "House id for provenance");
  auto* ssplit = leaf(sig, "split", "Balanced train/test split with augmentation", "signatures split", signatures_split);
  bind.add(ssplit, "--manifest", "/signatures/manifest", ValueKind::text, "Image manifest");
  bind.add(ssplit, "--train", "/signatures/train", ValueKind::integer, "Training images over all classes");
  bind.add(ssplit, "--test", "/signatures/test", ValueKind::integer, "Test images over all classes");

  auto* cls = app.add_subcommand("classify", "Appliance classifier");
  cls->fallthrough();
  cls->require_subcommand(1);
  bind.add(cls, "--manifest", "/classify/manifest", ValueKind::text, "Image manifest");
  auto* ctrain = leaf(cls, "train", "Train a classifier", "classify train", classify_train);
  bind.add(ctrain, "--model", "/classify/model", ValueKind::text, "simple-dnn|compact-cnn");
  bind.add(ctrain, "--head", "/classify/head", ValueKind::text, "resnet|alexnet|densenet");
  bind.add(ctrain, "--lr", "/classify/learning_rate", ValueKind::real, "SGD learning rate");
  bind.add(ctrain, "--epochs", "/classify/epochs", ValueKind::integer, "Epochs");
  bind.add(ctrain, "--batch", "/classify/batch_size", ValueKind::integer, "Batch size");
  auto* ceval = leaf(cls, "eval", "Confusion matrix and metrics", "classify eval", classify_eval);
  bind.add(ceval, "--ckpt", "/classify/ckpt", ValueKind::text, "Checkpoint");

  auto* beh = leaf(&app, "behavior", "Power summary and transient histogram", "behavior", behavior_cmd);
  bind.add(beh, "--synced", "/behavior/synced", ValueKind::text, "Synced CSV");
  bind.add(beh, "--house", "/behavior/house", ValueKind::text, "House id");
  bind.add(beh, "--appliance", "/behavior/appliance", ValueKind::text, "Appliance column");
  bind.add(beh, "--days", "/behavior/days", ValueKind::real, "Leading days to summarize");

  auto* rep = leaf(&app, "report", "CSV and SVG plot data", "report", report_cmd);
  bind.add(rep, "--kind", "/report/kind", ValueKind::text, "overlay|histogram|confusion");
  bind.add(rep, "--input", "/report/input", ValueKind::text, "CSV from an earlier stage");
  bind.add(rep, "--title", "/report/title", ValueKind::text, "Chart title");

  if (argc < 2) {
    std::cerr << app.help();
    return kUsageExit;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }

  const std::pair<std::string, std::function<void(RunContext&)>>* chosen = nullptr;
  for (const auto& [sub, h] : handlers)
    if (sub->parsed()) chosen = &h;
  if (chosen == nullptr) {
    std::cerr << app.help();
    return kUsageExit;
  }

  try {
    json config = nilmkit::default_config();
    if (!config_file.empty()) {
      const json file = nilmkit::load_config_file(config_file);
      nilmkit::check_known_keys(config, file);
      config.merge_patch(file);
    }
    bind.apply(config);
    RunContext ctx(chosen->first, config);
    chosen->second(ctx);
    const auto manifest = ctx.write_manifest();
    ctx.log("wrote " + manifest.string());
    return 0;
  } catch (const std::exception& e) {
    json err{{"error", {{"kind", error_kind(e)}, {"message", e.what()}}}};
    if (const auto* pe = dynamic_cast<const nilm::ParseError*>(&e)) err["error"]["line"] = pe->line();
    std::cerr << err.dump() << '\n';
    return kFailureExit;
  }
}
