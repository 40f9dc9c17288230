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

#include "run_context.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "nilm/error.hpp"
#include "nilm/kernels.hpp"

#ifndef NILMKIT_VERSION
#define NILMKIT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace nilmkit {

namespace {

json parse_value(const std::string& raw, ValueKind kind, const std::string& flag) {
  const char* b = raw.data();
  const char* e = raw.data() + raw.size();
  switch (kind) {
    case ValueKind::text:
      return raw;
    case ValueKind::integer: {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc{} || p != e || raw.empty())
        throw nilm::ConfigError(flag + " expects a non-negative integer, got '" + raw + "'");
      return v;
    }
    case ValueKind::real: {
      double v = 0.0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc{} || p != e || raw.empty())
        throw nilm::ConfigError(flag + " expects a number, got '" + raw + "'");
      return v;
    }
    case ValueKind::boolean:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw nilm::ConfigError(flag + " expects true or false, got '" + raw + "'");
  }
  return nullptr;
}

}  // namespace

void Bindings::add(CLI::App* app, const std::string& flag, const std::string& pointer,
                   ValueKind kind, const std::string& help) {
  auto& b = items_.emplace_back();
  b.target = json::json_pointer(pointer);
  b.kind = kind;
  b.option = app->add_option(flag, b.raw, help);
}

void Bindings::apply(json& config) const {
  for (const auto& b : items_) {
    if (b.option->count() == 0) continue;
    config[b.target] = parse_value(b.raw, b.kind, b.option->get_name());
  }
}

json default_config() {
  return json::parse(R"({
    "seed": 0,
    "out": "nilmkit-out",
    "ingest": {
      "house": null, "file": null, "appliance": null, "split_ratio": 0.8,
      "synth": {
        "length": 50000, "noise_level": 0.05, "period": 1, "start_time": 0,
        "appliances": [
          {"name": "fridge", "states": [0, 100], "min_dwell": 100, "max_dwell": 400},
          {"name": "kettle", "states": [0, 50], "min_dwell": 100, "max_dwell": 400}
        ]
      }
    },
    "windows": {"pairs": null, "start": 0, "length": 1000, "offset": 35, "budget": 20000},
    "nilm": {
      "pairs": null, "base": null, "ckpt": null, "site": null, "stats": null,
      "appliance": null, "tau": null,
      "hidden": 1300, "epochs": 50, "batch_size": 64, "learning_rate": 0.001
    },
    "signatures": {
      "synced": null, "manifest": null, "house": "house", "appliances": [],
      "transform": "wavelet",
      "max_points": 300, "offset": 150, "max_iterations": 1000,
      "min_scale": 1, "max_scale": 500, "segment": 64, "hop": 32, "window": "hann",
      "height": 34, "width": 56,
      "train": 600, "test": 200, "augmentation_budget": 1.0,
      "max_rotation_degrees": 15.0, "max_shear": 0.2, "min_crop_fraction": 0.8
    },
    "classify": {
      "manifest": null, "ckpt": null, "model": "compact-cnn", "head": "densenet",
      "epochs": 20, "batch_size": 16, "learning_rate": 0.001
    },
    "behavior": {
      "synced": null, "house": "house_1", "appliance": null, "days": 2.0,
      "minor": 3.0, "large": 10.0, "ceiling": 50.0
    },
    "report": {"kind": null, "input": null, "title": ""}
  })");
}

void check_known_keys(const json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object()) return;
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string path = where + "/" + it.key();
    if (!base.contains(it.key())) throw nilm::ConfigError("unknown config key " + path);
    const json& slot = base.at(it.key());
    if (slot.is_null() || slot.is_array()) continue;
    if (slot.is_object() != it.value().is_object())
      throw nilm::ConfigError("config key " + path + " has the wrong type");
    if (slot.is_object()) check_known_keys(slot, it.value(), path);
  }
}

json load_config_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw nilm::ConfigError("cannot open config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw nilm::ConfigError("config " + file.string() + ": " + e.what());
  }
  if (!j.is_object()) throw nilm::ConfigError("config " + file.string() + " is not an object");
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw nilm::Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw nilm::DataError("cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

RunContext::RunContext(std::string command, json config)
    : command_(std::move(command)), config_(std::move(config)) {
  out_ = config_.at("out").get<std::string>();
  const char* v = std::getenv("NILMKIT_VERBOSE");
  verbose_ = v != nullptr && *v != '\0' && std::string(v) != "0";
  fs::create_directories(out_);
}

const json& RunContext::at(const std::string& pointer) const {
  const json::json_pointer p(pointer);
  if (!config_.contains(p)) throw nilm::ConfigError("missing config value " + pointer);
  return config_.at(p);
}

bool RunContext::has(const std::string& pointer) const {
  const json::json_pointer p(pointer);
  return config_.contains(p) && !config_.at(p).is_null();
}

std::string RunContext::text(const std::string& pointer) const {
  const json& v = at(pointer);
  if (!v.is_string()) throw nilm::ConfigError(pointer + " must be a string");
  return v.get<std::string>();
}

std::size_t RunContext::count(const std::string& pointer) const {
  const json& v = at(pointer);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw nilm::ConfigError(pointer + " must be a non-negative integer");
  return v.get<std::size_t>();
}

double RunContext::real(const std::string& pointer) const {
  const json& v = at(pointer);
  if (!v.is_number()) throw nilm::ConfigError(pointer + " must be a number");
  return v.get<double>();
}

std::uint64_t RunContext::seed() const { return count("/seed"); }

fs::path RunContext::input(const std::string& pointer) const {
  if (!has(pointer)) throw nilm::ConfigError("missing required input " + pointer);
  const fs::path p = text(pointer);
  if (!fs::exists(p)) throw nilm::ConfigError("input does not exist: " + p.string());
  return p;
}

fs::path RunContext::output(const fs::path& relative) {
  const fs::path p = out_ / relative;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  outputs_.push_back(p);
  return p;
}

void RunContext::record(const fs::path& file) { outputs_.push_back(file); }

void RunContext::log(const std::string& line) const {
  if (verbose_) std::cerr << line << '\n';
}

fs::path RunContext::write_manifest() const {
  json recorded = config_;
  recorded.erase("out");
  json outputs = json::array();
  std::vector<std::string> rel;
  for (const auto& p : outputs_) rel.push_back(fs::relative(p, out_).generic_string());
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
  for (const auto& r : rel) outputs.push_back({{"path", r}, {"sha256", sha256_file(out_ / r)}});

  json m;
  m["command"] = command_;
  m["config"] = recorded;
  m["config_sha256"] = sha256_hex(recorded.dump());
  m["seed"] = seed();
  m["version"] = NILMKIT_VERSION;
  m["isa"] = std::string(nilm::kernels::isa_name(nilm::kernels::active_isa()));
  m["outputs"] = outputs;

  const fs::path file = out_ / "run_manifest.json";
  std::ofstream(file, std::ios::binary) << m.dump(2) << '\n';
  return file;
}

}  // namespace nilmkit
