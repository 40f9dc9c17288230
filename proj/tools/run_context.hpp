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

#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace nilmkit {

using nlohmann::json;

enum class ValueKind { text, integer, real, boolean };

// A command-line option whose value lands at a JSON pointer in the run
// config when it is given explicitly.
struct Binding {
  CLI::Option* option = nullptr;
  std::string raw;
  json::json_pointer target;
  ValueKind kind = ValueKind::text;
};

class Bindings {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& pointer, ValueKind kind,
           const std::string& help);
  // Writes every option that appeared on the command line into `config`.
  void apply(json& config) const;

 private:
  std::deque<Binding> items_;
};

json default_config();

// Keys in `overlay` must already exist in `base` (arrays and null slots take
// any value). Throws nilm::ConfigError naming the first unknown key.
void check_known_keys(const json& base, const json& overlay, const std::string& where = "");

json load_config_file(const std::filesystem::path& file);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

class RunContext {
 public:
  RunContext(std::string command, json config);

  const json& config() const { return config_; }
  const json& at(const std::string& pointer) const;
  std::string text(const std::string& pointer) const;
  std::size_t count(const std::string& pointer) const;
  double real(const std::string& pointer) const;
  bool has(const std::string& pointer) const;
  std::uint64_t seed() const;

  // Throws ConfigError when the pointer is unset or the path is missing.
  std::filesystem::path input(const std::string& pointer) const;

  const std::filesystem::path& out_dir() const { return out_; }
  // Path under the output directory, recorded in the run manifest.
  std::filesystem::path output(const std::filesystem::path& relative);
  void record(const std::filesystem::path& file);

  void log(const std::string& line) const;

  // run_manifest.json: command, config, its hash, seed, version, isa and
  // every output with its hash. No clock values, so reruns match.
  std::filesystem::path write_manifest() const;

 private:
  std::string command_;
  json config_;
  std::filesystem::path out_;
  std::vector<std::filesystem::path> outputs_;
  bool verbose_ = false;
};

}  // namespace nilmkit
