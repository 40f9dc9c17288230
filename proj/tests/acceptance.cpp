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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
//
//   acceptance [--only N[,M...]] [--redd <house_1 dir>]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nilm/classifier.hpp"
#include "nilm/error.hpp"
#include "nilm/gradcheck.hpp"
#include "nilm/ingest.hpp"
#include "nilm/metrics.hpp"
#include "nilm/seq23point.hpp"
#include "nilm/signature.hpp"
#include "nilm/windowing.hpp"

namespace fs = std::filesystem;
using namespace nilm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = d(rng);
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("nilm_accept_" + tag + "_" + std::to_string(std::random_device{}()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + std::string(NILMKIT_BIN) + "' " + args +
                          " >>cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---- 1 ---------------------------------------------------------------------------

Outcome shape_chain() {
  Outcome o;
  const Network net = build_seq23point_network(1000, kDefaultHidden);
  const auto shapes = net.layer_output_shapes({2, 1, 1000});
  const std::vector<std::size_t> want = {991, 984, 979, 975, 971};
  std::string got;
  for (std::size_t i = 0; i < 5; ++i) {
    got += (i ? "/" : "") + std::to_string(shapes[i][2]);
    o.require(shapes[i][2] == want[i], "conv" + std::to_string(i + 1) + " width " + std::to_string(shapes[i][2]));
  }
  const std::size_t flat = shapes[4][1] * shapes[4][2];
  o.require(flat == 48550, "flatten " + std::to_string(flat));
  o.require(seq23point_flatten_width(1000) == 48550, "flatten helper");
  const Tensor y = net.forward(random_tensor({2, 1, 1000}, 1));
  o.require(y.shape() == Shape{2, 3}, "forward output shape");
  o.detail = o.pass ? "widths " + got + ", flatten " + std::to_string(flat) : o.detail;
  return o;
}

// ---- 2 ---------------------------------------------------------------------------

struct GradCase {
  std::string name;
  std::function<GradCheckResult(std::uint64_t)> run;
  std::size_t params = 0;
};

Network mini_seq23point() {
  // the same five kernels at two channels, window 40
  Network net;
  const std::size_t kernels[5] = {10, 8, 6, 5, 5};
  std::size_t in = 1;
  for (std::size_t i = 0; i < 5; ++i) {
    net.add("conv" + std::to_string(i + 1), ConvLayerSpec{in, 2, kernels[i], 1, 0, Activation::relu});
    in = 2;
  }
  net.add("dense1", DenseLayerSpec{2 * (40 - 29), 8, Activation::relu});
  net.add("dense2", DenseLayerSpec{8, 3, Activation::none});
  return net;
}

Outcome gradient_suite() {
  Outcome o;
  std::vector<GradCase> cases;
  cases.push_back({"dense", [](std::uint64_t s) {
                     Network n;
                     n.add("d1", DenseLayerSpec{6, 5, Activation::relu});
                     n.add("d2", DenseLayerSpec{5, 3, Activation::none});
                     n.initialize(s);
                     return finite_difference_check(n, random_tensor({4, 6}, s + 1), random_tensor({4, 3}, s + 2),
                                                    LossKind::mse);
                   }});
  cases.push_back({"conv1d", [](std::uint64_t s) {
                     Network n;
                     n.add("c1", ConvLayerSpec{2, 3, 4, 2, 1, Activation::relu});
                     n.add("c2", ConvLayerSpec{3, 2, 3, 1, 2, Activation::none});
                     n.initialize(s);
                     const Tensor x = random_tensor({3, 2, 13}, s + 1);
                     return finite_difference_check(n, x, random_tensor(n.layer_output_shapes(x.shape()).back(), s + 2),
                                                    LossKind::mse);
                   }});
  cases.push_back({"conv2d+pool", [](std::uint64_t s) {
                     Network n;
                     n.add("c1", Conv2dLayerSpec{1, 2, 3, 1, 1, Activation::relu});
                     n.add("p1", MaxPool2dSpec{2});
                     n.add("c2", Conv2dLayerSpec{2, 2, 3, 1, 0, Activation::none});
                     n.initialize(s);
                     const Tensor x = random_tensor({2, 1, 8, 8}, s + 1);
                     return finite_difference_check(n, x, random_tensor(n.layer_output_shapes(x.shape()).back(), s + 2),
                                                    LossKind::mse);
                   }});
  cases.push_back({"softmax+ce", [](std::uint64_t s) {
                     Network n;
                     n.add("d1", DenseLayerSpec{7, 6, Activation::relu});
                     n.add("d2", DenseLayerSpec{6, 4, Activation::softmax});
                     n.initialize(s);
                     const Tensor cls = Tensor::from({3}, {static_cast<double>(s % 4), 1, 3});
                     return finite_difference_check(n, random_tensor({3, 7}, s + 1), cls, LossKind::cross_entropy);
                   }});
  cases.push_back({"seq2-[3]point", [](std::uint64_t s) {
                     Network n = mini_seq23point();
                     n.initialize(s);
                     return finite_difference_check(n, random_tensor({2, 1, 40}, s + 1), random_tensor({2, 3}, s + 2),
                                                    LossKind::mse);
                   }});

  std::string summary;
  for (auto& c : cases) {
    double worst = 0.0;
    std::size_t params = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = c.run(seed);
      worst = std::max(worst, r.max_discrepancy);
      params = r.checked;
      o.require(r.max_discrepancy < 1e-4, c.name + " seed " + std::to_string(seed) + " discrepancy " +
                                              fmt("%.2e", r.max_discrepancy) + " at " + r.worst);
    }
    o.require(params <= 1000, c.name + " has " + std::to_string(params) + " parameters");
    summary += (summary.empty() ? "" : ", ") + c.name + " " + std::to_string(params) + "p " + fmt("%.1e", worst);
  }
  if (o.pass) o.detail = "20 seeds each, worst: " + summary;
  return o;
}

// ---- 3 ---------------------------------------------------------------------------

SyncedHouse synthetic_house(std::uint64_t seed, std::size_t length) {
  SynthConfig sc;
  sc.length = length;
  sc.seed = seed;
  sc.noise_level = 0.05;
  sc.appliances = {{"fridge", {0, 100}, 100, 400}, {"kettle", {0, 50}, 100, 400}};
  return synth_generate(sc);
}

WindowBatch normalized_windows(const PairSeries& p, const NormStats& as, const NormStats& ps,
                               const WindowConfig& wc) {
  return build_windows(normalize(p.aggregate, as), normalize(p.appliance, ps), wc);
}

Outcome transfer_freeze() {
  Outcome o;
  const auto house = synthetic_house(11, 4000);
  const auto fr = build_appliance_pair_file(house, "fridge", 0.8);
  const auto ke = build_appliance_pair_file(house, "kettle", 0.8);
  WindowConfig wc;
  wc.length = 60;
  wc.offset = 20;
  wc.budget = 1000;
  const auto as = compute_norm_stats(fr.train.aggregate);
  const auto base_data = normalized_windows(fr.train, as, compute_norm_stats(fr.train.appliance), wc);
  const auto new_data = normalized_windows(ke.train, as, compute_norm_stats(ke.train.appliance), wc);

  const std::size_t hidden = 16;
  NetworkState base = build_seq23point(3, wc.length, hidden);
  FitConfig fc;
  fc.epochs = 2;
  fc.batch_size = 16;
  fc.seed = 3;
  train_appliance(base, base_data, fc);
  const fs::path dir = scratch("transfer");
  save_checkpoint(base, dir / "base.ckpt");
  const NetworkState reloaded = load_checkpoint(dir / "base.ckpt");

  fc.seed = 4;
  const NetworkState tuned = transfer_train(reloaded, new_data, fc);
  for (int i = 1; i <= 5; ++i) {
    const std::string name = "conv" + std::to_string(i);
    const auto& a = base.network.layer(name);
    const auto& b = tuned.network.layer(name);
    const bool same = a.weight.storage().size() == b.weight.storage().size() &&
                      std::memcmp(a.weight.storage().data(), b.weight.storage().data(),
                                  a.weight.storage().size() * sizeof(double)) == 0 &&
                      std::memcmp(a.bias.storage().data(), b.bias.storage().data(),
                                  a.bias.storage().size() * sizeof(double)) == 0;
    o.require(same, name + " changed");
  }
  o.require(tuned.network.layer("dense1").weight.storage() != base.network.layer("dense1").weight.storage(),
            "dense head did not move");
  const std::size_t head = seq23point_flatten_width(wc.length) * hidden + hidden + hidden * 3 + 3;
  o.require(tuned.network.trainable_parameter_count() == head,
            "trainable " + std::to_string(tuned.network.trainable_parameter_count()) + " vs " + std::to_string(head));

  // full-size freeze arithmetic
  Network full = build_seq23point_network(1000, 1300);
  full.set_trainable("conv", false);
  const std::size_t full_head = 48550u * 1300 + 1300 + 1300u * 3 + 3;
  o.require(full.trainable_parameter_count() == full_head, "full-size trainable count");
  fs::remove_all(dir);
  if (o.pass)
    o.detail = "conv1..conv5 byte-identical; trainable " + std::to_string(head) + " (scaled), " +
               std::to_string(full_head) + " (full size)";
  return o;
}

// ---- 4 ---------------------------------------------------------------------------

Outcome synthetic_disaggregation() {
  Outcome o;
  std::string accs;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto house = synthetic_house(seed, 50000);
    const auto split = build_appliance_pair_file(house, "fridge", 0.8);
    const auto as = compute_norm_stats(split.train.aggregate);
    const auto ps = compute_norm_stats(split.train.appliance);
    WindowConfig wc;
    wc.length = 100;
    wc.offset = 15;
    wc.budget = 1000000;
    const auto train = normalized_windows(split.train, as, ps, wc);
    wc.offset = 10;
    const auto test = normalized_windows(split.test, as, ps, wc);

    NetworkState st = build_seq23point(seed, 100, 130);
    FitConfig fc;
    fc.epochs = 30;
    fc.batch_size = 16;
    fc.seed = seed;
    train_appliance(st, train, fc);
    const auto rep = evaluate_windows(st.network, test, 0.1, "fridge");
    accs += (accs.empty() ? "" : "/") + fmt("%.2f", rep.accuracy);
    o.require(rep.accuracy >= 90.0, "seed " + std::to_string(seed) + " accuracy " + fmt("%.2f", rep.accuracy));
  }
  o.detail = "tau 0.1 accuracy " + accs + " %" + (o.pass ? "" : " | " + o.detail);
  return o;
}

// ---- 5 ---------------------------------------------------------------------------

Outcome site_classification() {
  Outcome o;
  // aggregate levels 4, 12.5, 34, 42.5, 104, 112.5 W sit inside the A/B/C/D bands
  SynthConfig sc;
  sc.length = 20000;
  sc.seed = 1;
  sc.noise_level = 0.005;
  sc.appliances = {{"base", {4, 12.5}, 100, 400}, {"heater", {0, 30, 100}, 100, 400}};
  const auto site = build_site_series(synth_generate(sc), "heater");
  const std::size_t cut = split_point(site.size(), 0.8);
  SiteSeries train, test;
  for (std::size_t i = 0; i < site.size(); ++i) {
    auto& d = i < cut ? train : test;
    d.aggregate.push_back(site.aggregate[i]);
    d.appliance.push_back(site.appliance[i]);
    d.labels.push_back(site.labels[i]);
  }
  std::set<SiteClass> present(test.labels.begin(), test.labels.end());
  o.require(present.size() == 4, "test data lacks a class");
  const auto stats = compute_norm_stats(train.aggregate);
  const auto rt = site_confusion(normalize(test.aggregate, stats), test.labels, stats);
  o.require(rt.accuracy == 100.0, "ground-truth round trip " + fmt("%.2f", rt.accuracy));

  WindowConfig wc;
  wc.length = 100;
  wc.offset = 20;
  wc.budget = 1000000;
  const auto tw = build_site_windows(train, stats, wc);
  wc.offset = 5;
  const auto vw = build_site_windows(test, stats, wc);
  NetworkState st = build_seq23point(1, 100, 32);
  FitConfig fc;
  fc.epochs = 8;
  fc.batch_size = 16;
  fc.seed = 1;
  train_appliance(st, tw.batch, fc);
  const auto rep = site_evaluate(st.network, vw, stats);
  o.require(rep.accuracy >= 75.0, "trained accuracy " + fmt("%.2f", rep.accuracy));
  if (o.pass)
    o.detail = "round trip 100%, trained " + fmt("%.2f", rep.accuracy) + "% on " + std::to_string(rep.total) +
               " held-out windows";
  return o;
}

// ---- 6 ---------------------------------------------------------------------------

Outcome transform_oracles() {
  Outcome o;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> w(0.0, 300.0);
  double worst_stft = 0.0;
  for (std::size_t segment : {4, 8, 16, 32, 64}) {
    for (auto fn : {WindowFunction::rectangular, WindowFunction::hann}) {
      std::vector<double> x(segment * 3 + rng() % 17);
      for (auto& v : x) v = w(rng);
      const StftConfig cfg{segment, segment / 2, fn};
      const Tensor s = stft_spectrogram(x, cfg);
      const std::size_t frames = (x.size() - segment) / cfg.hop + 1;
      o.require(s.shape() == Shape{segment / 2 + 1, frames}, "stft shape");
      if (!o.pass) return o;
      std::vector<double> oracle(s.size());
      double peak = 0.0;
      for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t k = 0; k <= segment / 2; ++k) {
          std::complex<long double> acc = 0;
          for (std::size_t n = 0; n < segment; ++n) {
            const long double taper =
                fn == WindowFunction::hann
                    ? 0.5L - 0.5L * std::cos(2.0L * std::numbers::pi_v<long double> * n / segment)
                    : 1.0L;
            const long double ang = -2.0L * std::numbers::pi_v<long double> * k * n / segment;
            acc += std::polar<long double>(x[f * cfg.hop + n] * taper, ang);
          }
          oracle[k * frames + f] = static_cast<double>(std::abs(acc));
          peak = std::max(peak, oracle[k * frames + f]);
        }
      }
      for (std::size_t i = 0; i < oracle.size(); ++i)
        worst_stft = std::max(worst_stft, std::abs(s.storage()[i] - oracle[i]) / peak);
    }
  }
  o.require(worst_stft <= 1e-9, "stft relative error " + fmt("%.2e", worst_stft));

  const CwtConfig cfg{1, 40};
  double worst_const = 0.0;
  for (double c : {0.0, 1.0, 250.0, 3000.0}) {
    const std::vector<double> flat(120, c);
    const Tensor t = mexican_hat_cwt(flat, cfg);
    for (std::size_t r = 0; r < cfg.scale_count(); ++r) {
      const double scale = static_cast<double>(cfg.min_scale + r);
      for (std::size_t i = 0; i < flat.size(); ++i)
        worst_const = std::max(worst_const, std::abs(t.at(r, i)) / scale);
    }
  }
  o.require(worst_const <= 1e-9, "cwt of constant " + fmt("%.2e", worst_const) + " x scale");

  std::vector<double> a(150), b(150), mix(150);
  for (auto& v : a) v = w(rng);
  for (auto& v : b) v = w(rng);
  const double p = 1.7, q = -0.35;
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = p * a[i] + q * b[i];
  const Tensor ta = mexican_hat_cwt(a, cfg), tb = mexican_hat_cwt(b, cfg), tm = mexican_hat_cwt(mix, cfg);
  double peak = 0.0, worst_lin = 0.0;
  for (double v : tm.storage()) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < tm.size(); ++i)
    worst_lin = std::max(worst_lin, std::abs(tm.storage()[i] - (p * ta.storage()[i] + q * tb.storage()[i])) / peak);
  o.require(worst_lin <= 1e-9, "cwt linearity " + fmt("%.2e", worst_lin));
  if (o.pass)
    o.detail = "stft " + fmt("%.1e", worst_stft) + ", cwt constant " + fmt("%.1e", worst_const) +
               "/scale, linearity " + fmt("%.1e", worst_lin);
  return o;
}

// ---- 7 ---------------------------------------------------------------------------

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image img(h, w);
  for (auto& v : img.pixels) v = d(rng);
  return img;
}

Outcome fusion_augmentation() {
  Outcome o;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Image a = random_image(34, 56, s), b = random_image(34, 56, s + 1000);
    o.require(fuse_images(a, Image(34, 56)) == a, "fuse identity");
    const Image ab = fuse_images(a, b);
    o.require(ab == fuse_images(b, a), "fuse commutativity");
    for (std::size_t i = 0; i < ab.pixels.size(); ++i) {
      if (ab.pixels[i] != std::min(1.0, a.pixels[i] + b.pixels[i]) || ab.pixels[i] < 0.0 || ab.pixels[i] > 1.0) {
        o.require(false, "fuse clamp");
        break;
      }
    }
    AugmentOp rot;
    rot.kind = AugmentKind::rotate;
    rot.angle_degrees = 0.0;
    o.require(augment_image(a, rot) == a, "rotate 0 identity");
    AugmentOp crop;
    crop.kind = AugmentKind::crop;
    crop.box_width = 56;
    crop.box_height = 34;
    o.require(augment_image(a, crop) == a, "full-frame crop identity");
    if (!o.pass) return o;
  }

  std::vector<SpectrogramImage> imgs;
  const std::map<std::string, std::size_t> originals = {{"a", 3}, {"b", 12}, {"c", 50}, {"d", 2}};
  for (const auto& [label, n] : originals) {
    for (std::size_t i = 0; i < n; ++i) {
      SpectrogramImage s;
      s.image = random_image(34, 56, imgs.size() + 7);
      s.label = label;
      s.id = label + "_" + std::to_string(i);
      imgs.push_back(std::move(s));
    }
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SplitConfig cfg;
    cfg.train_per_class = 8;
    cfg.test_per_class = 4;
    cfg.seed = seed;
    const auto r = split_train_test(imgs, cfg);
    std::map<std::string, std::size_t> ntrain, ntest;
    std::set<std::string> train_roots;
    for (const auto& s : r.train) {
      ++ntrain[s.label];
      train_roots.insert(s.original ? s.id : s.parent);
    }
    for (const auto& s : r.test) {
      ++ntest[s.label];
      o.require(!train_roots.count(s.original ? s.id : s.parent), "ancestry crosses the split: " + s.id);
    }
    for (const auto& [label, n] : originals) {
      o.require(ntrain[label] == 8 && ntest[label] == 4, "class " + label + " counts " +
                                                             std::to_string(ntrain[label]) + "/" +
                                                             std::to_string(ntest[label]));
    }
    if (!o.pass) return o;
  }
  o.detail = "fuse laws on 50 pairs, rotate-0/full crop identities, 5 balanced ancestor-disjoint splits";
  return o;
}

// ---- 8 ---------------------------------------------------------------------------

std::vector<SpectrogramImage> toy_images(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.2), level(0.6, 1.0);
  std::vector<SpectrogramImage> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int c = 0; c < 2; ++c) {
      SpectrogramImage s;
      s.image = Image(kImageHeight, kImageWidth);
      const double lit = level(rng);
      for (std::size_t y = 0; y < kImageHeight; ++y)
        for (std::size_t x = 0; x < kImageWidth; ++x)
          s.image.at(y, x) = ((x < kImageWidth / 2) == (c == 0)) ? lit : noise(rng);
      s.label = c == 0 ? "left" : "right";
      s.id = s.label + std::to_string(i);
      out.push_back(std::move(s));
    }
  }
  return out;
}

Outcome classifier_sanity() {
  Outcome o;
  const std::size_t count = build_simple_dnn(1).network.parameter_count();
  const std::size_t arithmetic = 1904u * 500 + 500 + 500u * 150 + 150 + 150u * 20 + 20;
  o.require(count == arithmetic, "count " + std::to_string(count) + " differs from layer arithmetic");
  o.require(count == 1031170, "count is " + std::to_string(count) + ", not the stated 1,031,170 (layer arithmetic " +
                                  "1904*500+500 + 500*150+150 + 150*20+20 = " + std::to_string(arithmetic) + ")");
  const ClassIndex ci({"left", "right"});
  std::string accs;
  for (std::uint64_t seed : {1, 2, 3}) {
    const ImageSet train = make_image_set(toy_images(20, 100 + seed), ci);
    const ImageSet test = make_image_set(toy_images(10, 200 + seed), ci);
    NetworkState st = build_simple_dnn(seed);
    ClassifierConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.01;
    cfg.seed = seed;
    const auto curves = train_classifier(st, train, test, cfg);
    const double acc = evaluate_classifier(st.network, test).metrics.accuracy;
    accs += (accs.empty() ? "" : "/") + fmt("%.0f", acc);
    o.require(acc == 100.0 && curves.test_accuracy.back() == 100.0, "toy seed " + std::to_string(seed));
  }
  o.detail = "toy accuracy " + accs + " % | " + (o.pass ? "count 1,031,170" : o.detail);
  return o;
}

// ---- 9 ---------------------------------------------------------------------------

Outcome metrics_oracle() {
  Outcome o;
  o.require(accuracy_percent(4860000, 6000000) == 81.0, "accuracy(4860000, 6000000)");
  o.require(f1_score(0.5, 0.5) == 0.5 && f1_score(0.75, 0.375) == 0.5 && f1_score(1.0, 0.25) == 0.4 &&
                f1_score(0.625, 0.625) == 0.625 && f1_score(0.0, 0.0) == 0.0,
            "f1 identities");
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng() % 5, n = 1 + rng() % 60;
    std::vector<std::size_t> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng() % k;
      p[i] = rng() % 3 == 0 ? t[i] : rng() % k;
    }
    const MetricSet a = precision_recall_f1(confusion_from_pairs(t, p, k));
    const MetricSet b = metrics_from_pairs(t, p, k);
    bool same = a.accuracy == b.accuracy && a.macro_f1 == b.macro_f1;
    for (std::size_t c = 0; c < k; ++c)
      same = same && a.per_class[c].precision == b.per_class[c].precision &&
             a.per_class[c].recall == b.per_class[c].recall && a.per_class[c].f1 == b.per_class[c].f1;
    if (!same) {
      o.require(false, "matrix and pair metrics differ on trial " + std::to_string(trial));
      break;
    }
  }
  if (o.pass) o.detail = "accuracy 81.0 exact, 100 matrix/pair comparisons, F1 identities exact";
  return o;
}

// ---- 10 --------------------------------------------------------------------------

const std::vector<std::string>& smoke_pipeline() {
  static const std::vector<std::string> steps = {
      "--seed 5 ingest synth --length 6000 --appliance fridge --out ingest",
      "--seed 5 ingest synth --length 6000 --appliance kettle --out ingest_kettle",
      "windows --pairs ingest/pairs_train.csv --window 60 --offset 30 --out windows",
      "nilm train --pairs ingest/pairs_train.csv --window 60 --offset 30 --hidden 8 --epochs 2 --batch 16 --out train",
      "--seed 6 nilm transfer --base train/model.ckpt --pairs ingest_kettle/pairs_train.csv --window 60 --offset 30 "
      "--epochs 1 --batch 16 --out transfer",
      "nilm eval --ckpt train/model.ckpt --pairs ingest/pairs_test.csv --window 60 --offset 30 --tau 0.1 --out eval",
      "nilm site-train --site ingest/site_train.csv --window 60 --offset 30 --hidden 8 --epochs 1 --batch 16 --out site",
      "nilm site-eval --ckpt site/site_model.ckpt --site ingest/site_test.csv --window 60 --offset 30 --out site_eval",
      "--config sig.json signatures generate --synced ingest/synced.csv --transform fused --out signatures",
      "--config sig.json signatures split --manifest signatures/manifest.csv --out split",
      "--config sig.json classify train --manifest split/split_manifest.csv --out classify",
      "--config sig.json classify eval --manifest split/split_manifest.csv --ckpt classify/classifier.ckpt "
      "--out classify_eval",
      "behavior --synced ingest/synced.csv --appliance fridge --days 0.05 --out behavior",
      "report --kind overlay --input eval/eval_points.csv --out report_overlay",
      "report --kind histogram --input behavior/behavior_histogram.csv --out report_histogram",
      "report --kind confusion --input classify_eval/confusion.csv --out report_confusion",
  };
  return steps;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = scratch("determinism");
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    std::ofstream(dir / "sig.json")
        << R"({"signatures": {"max_points": 64, "offset": 32, "max_iterations": 12, "max_scale": 24,)"
           R"( "segment": 16, "hop": 8, "train": 16, "test": 8}, "classify": {"epochs": 2}})";
    for (const auto& step : smoke_pipeline()) {
      const int code = run_cli(dir, step);
      if (code != 0) {
        o.require(false, std::string("run ") + run + " step '" + step + "' exited " + std::to_string(code) +
                             ": " + slurp(dir / "cli.log").substr(0, 300));
        return o;
      }
    }
  }
  std::size_t manifests = 0, checkpoints = 0, artifacts = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    const std::string name = rel.filename().string();
    const bool manifest = name == "run_manifest.json";
    const bool ckpt = rel.extension() == ".ckpt";
    if (name == "cli.log" || name == "sig.json") continue;
    ++artifacts;
    manifests += manifest;
    checkpoints += ckpt;
    if (slurp(e.path()) != slurp(root / "b" / rel)) o.require(false, rel.generic_string() + " differs");
  }
  o.require(manifests == smoke_pipeline().size(), "expected one manifest per stage");
  fs::remove_all(root);
  if (o.pass)
    o.detail = std::to_string(smoke_pipeline().size()) + " stages; " + std::to_string(manifests) + " manifests, " +
               std::to_string(checkpoints) + " checkpoints, " + std::to_string(artifacts) +
               " files byte-identical across reruns";
  return o;
}

// ---- 11 --------------------------------------------------------------------------

// REDD low-frequency layout: two mains with a 40 s hole and three appliances.
fs::path write_redd_fixture(const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream(dir / "labels.dat") << "1 mains\n2 mains\n3 refrigerator\n4 dishwaser\n5 microwave\n";
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> noise(0.0, 5.0);
  std::ofstream ch[5];
  for (int c = 0; c < 5; ++c) ch[c].open(dir / ("channel_" + std::to_string(c + 1) + ".dat"));
  for (int i = 0; i < 3000; ++i) {
    const long t = 1303132929L + 3L * i;
    const double fridge = (i / 150) % 2 ? 190.0 : 5.0;
    const double dish = (i / 700) % 3 == 1 ? 1100.0 : 0.0;
    const double micro = (i % 500) < 20 ? 1500.0 : 0.0;
    const double load = fridge + dish + micro;
    if (i < 1000 || i >= 1013) {
      ch[0] << t << ' ' << 0.6 * load + noise(rng) << '\n';
      ch[1] << t << ' ' << 0.4 * load + noise(rng) << '\n';
    }
    ch[2] << t << ' ' << fridge << '\n';
    ch[3] << t << ' ' << dish << '\n';
    ch[4] << t << ' ' << micro << '\n';
  }
  return dir;
}

Outcome parity_harness(const std::string& redd_dir) {
  Outcome o;
  const fs::path root = scratch("redd");
  const bool real = !redd_dir.empty();
  const fs::path house_dir = real ? fs::absolute(redd_dir) : write_redd_fixture(root / "house_1");

  const ReddHouse raw = parse_redd_house(house_dir);
  const SyncedHouse house = synchronize_house(raw.channels, raw.labels);
  std::size_t n_apps = 0, n_mains = 0;
  for (const auto& [ch, label] : raw.labels) {
    if (!raw.channels.count(ch)) continue;
    std::string l = label;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    (l == "mains" ? n_mains : n_apps) += 1;
  }
  o.require(house.column_count() == n_apps + 3, "columns " + std::to_string(house.column_count()) + " for " +
                                                     std::to_string(n_apps) + " appliances");
  // every reference row without a mains reading must read exactly 0
  std::set<std::int64_t> mains_stamps;
  for (const auto& [ch, label] : raw.labels)
    if ((label == "mains" || label == "Mains") && raw.channels.count(ch))
      for (auto t : raw.channels.at(ch).timestamps) mains_stamps.insert(t);
  std::size_t zero_rows = 0;
  for (std::size_t i = 0; i < house.rows(); ++i) {
    if (!mains_stamps.count(house.timestamps[i])) {
      o.require(house.mains1[i] == 0.0 && house.mains2[i] == 0.0, "gap row not zero-filled");
      ++zero_rows;
      if (!o.pass) break;
    }
  }
  o.require(house.mains1_gaps > 0 || real, "fixture gap not counted");

  for (const char* name : {"dishwasher", "microwave", "refrigerator", "washer-dryer", "washer_dryer"})
    o.require(appliance_threshold(name).has_value(), std::string("no threshold for ") + name);
  o.require(appliance_threshold("dishwaser") == 0.05 && appliance_threshold("refrigerator") == 0.4,
            "REDD spellings");

  // CLI: ingest, a short training run, then eval choosing tau by appliance name
  const std::string fridge = std::find(house.appliance_names.begin(), house.appliance_names.end(), "refrigerator") !=
                                     house.appliance_names.end()
                                 ? "refrigerator"
                                 : house.appliance_names.front();
  const std::string win = " --window 60 --offset 30 --budget 2000";
  int code = run_cli(root, "ingest redd --house '" + house_dir.string() + "' --appliance " + fridge + " --out ing");
  if (code == 0)
    code = run_cli(root, "nilm train --pairs ing/pairs_train.csv" + win + " --hidden 16 --epochs 4 --out tr");
  if (code == 0)
    code = run_cli(root, "nilm eval --ckpt tr/model.ckpt --pairs ing/pairs_test.csv" + win + " --appliance " +
                             fridge + " --out ev");
  o.require(code == 0, "CLI stage failed: " + slurp(root / "cli.log").substr(0, 300));
  std::string accuracy;
  if (code == 0) {
    const std::string summary = slurp(root / "ev" / "eval_summary.txt");
    o.require(summary.find("tau: 0.400000") != std::string::npos || fridge != "refrigerator",
              "eval did not apply the refrigerator threshold");
    const auto pos = summary.find("accuracy: ");
    if (pos != std::string::npos) accuracy = summary.substr(pos + 10, summary.find('\n', pos) - pos - 10);
  }
  fs::remove_all(root);
  if (o.pass) {
    o.detail = std::string(real ? "REDD data at " + redd_dir : "no REDD data supplied, REDD-layout fixture") + ": " +
               std::to_string(house.column_count()) + " columns, " + std::to_string(zero_rows) +
               " zero-filled mains rows, eval tau by name (reported accuracy " + accuracy + "%)";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::string redd;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else if (a == "--redd" && i + 1 < argc) {
      redd = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only N[,M...]] [--redd <dir>]\n", argv[0]);
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "shape chain", 1.0, shape_chain},
      {2, "gradient suite", 60.0, gradient_suite},
      {3, "transfer freeze", 60.0, transfer_freeze},
      {4, "synthetic disaggregation", 600.0, synthetic_disaggregation},
      {5, "site classification", 600.0, site_classification},
      {6, "transform oracles", 30.0, transform_oracles},
      {7, "fusion and augmentation laws", 30.0, fusion_augmentation},
      {8, "classifier sanity", 120.0, classifier_sanity},
      {9, "metrics oracle", 10.0, metrics_oracle},
      {10, "determinism", 300.0, determinism},
      {11, "REDD parity harness", 300.0, [&] { return parity_harness(redd); }},
  };

  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += " | took " + fmt("%.1f", secs) + " s, budget " + fmt("%.0f", c.budget_seconds) + " s";
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
