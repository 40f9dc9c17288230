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

#include <png.h>

#include <cmath>
#include <cstring>

#include "nilm/error.hpp"
#include "nilm/signature.hpp"
#include "text_util.hpp"

namespace nilm {

namespace fs = std::filesystem;

void write_png(const Image& img, const fs::path& file) {
  if (img.pixels.empty()) throw ShapeError("cannot write an empty image");
  std::vector<png_byte> bytes(img.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<png_byte>(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 255.0));
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&pi, file.c_str(), 0, bytes.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw DataError("cannot write " + file.string() + ": " + msg);
  }
}

Image read_png(const fs::path& file) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, file.c_str())) {
    throw DataError("cannot read " + file.string() + ": " + pi.message);
  }
  pi.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, bytes.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw DataError("cannot decode " + file.string() + ": " + msg);
  }
  Image img(pi.height, pi.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
  return img;
}

namespace {

constexpr std::string_view kManifestHeader = "path,class,kind,house,channel,start,original,id,parent,split";

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw DataError(std::string(what) + " '" + s + "' contains a comma or newline");
  }
}

}  // namespace

void write_manifest(const std::vector<ManifestEntry>& entries, const fs::path& file) {
  std::string s(kManifestHeader);
  s += '\n';
  for (const auto& e : entries) {
    for (const auto* f : {&e.path, &e.label, &e.source.house, &e.id, &e.parent, &e.split}) {
      check_field(*f, "manifest field");
    }
    s += e.path + ',' + e.label + ',' + std::string(transform_name(e.kind)) + ',' + e.source.house +
         ',' + std::to_string(e.source.channel) + ',' + std::to_string(e.source.start) + ',' +
         (e.original ? "1" : "0") + ',' + e.id + ',' + e.parent + ',' + e.split + '\n';
  }
  text::write_file(file, s);
}

std::vector<ManifestEntry> read_manifest(const fs::path& file) {
  auto in = text::open_in(file);
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != kManifestHeader) {
    throw ParseError(file.string() + ": expected manifest header", 1);
  }
  std::vector<ManifestEntry> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 10) throw ParseError(file.string() + ": expected 10 fields", lineno);
    ManifestEntry e;
    e.path = f[0];
    e.label = f[1];
    e.kind = parse_transform(f[2]);
    e.source.house = f[3];
    const auto ch = text::to_int(f[4]);
    const auto st = text::to_int(f[5]);
    if (!ch || !st || *st < 0 || (f[6] != "0" && f[6] != "1")) {
      throw ParseError(file.string() + ": bad numeric field", lineno);
    }
    e.source.channel = static_cast<int>(*ch);
    e.source.start = static_cast<std::size_t>(*st);
    e.original = f[6] == "1";
    e.id = f[7];
    e.parent = f[8];
    e.split = f[9];
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> store_images(const std::vector<SpectrogramImage>& images,
                                        const fs::path& dir, const std::string& split) {
  std::vector<ManifestEntry> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    check_field(img.id, "image id");
    const std::string rel = (split.empty() ? std::string() : split + "/") + img.id + ".png";
    write_png(img.image, dir / rel);
    ManifestEntry e;
    e.path = rel;
    e.label = img.label;
    e.kind = img.kind;
    e.source = img.source;
    e.original = img.original;
    e.id = img.id;
    e.parent = img.parent;
    e.split = split;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace nilm
