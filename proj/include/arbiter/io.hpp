// Copyright 2026 The Arbiter Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "arbiter/error.hpp"
#include "arbiter/raster.hpp"

namespace arbiter::io {

namespace fs = std::filesystem;

inline cv::Mat read_image(const fs::path& path, int flags) {
  if (!fs::exists(path)) throw InputError("file not found: " + path.string());
  cv::Mat m = cv::imread(path.string(), flags);
  if (m.empty() || m.cols <= 0 || m.rows <= 0) throw InputError("cannot decode image: " + path.string());
  return m;
}

/// 8-bit colour image (PNG, JPEG, ...).
inline RgbImage read_rgb(const fs::path& path) {
  const cv::Mat bgr = read_image(path, cv::IMREAD_COLOR);
  RgbImage img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) img(x, y) = {row[x][2], row[x][1], row[x][0]};
  }
  return img;
}

/// Single-channel 8-bit map, value v mapped to v / 255.
inline MapRaster read_map(const fs::path& path) {
  const cv::Mat g = read_image(path, cv::IMREAD_GRAYSCALE);
  MapRaster map(g.cols, g.rows);
  for (int y = 0; y < g.rows; ++y) {
    const auto* row = g.ptr<std::uint8_t>(y);
    for (int x = 0; x < g.cols; ++x) map(x, y) = row[x] / 255.0;
  }
  return map;
}

/// Binary mask: any nonzero pixel is foreground (1.0).
inline MapRaster read_mask(const fs::path& path) {
  const cv::Mat g = read_image(path, cv::IMREAD_GRAYSCALE);
  MapRaster map(g.cols, g.rows);
  for (int y = 0; y < g.rows; ++y) {
    const auto* row = g.ptr<std::uint8_t>(y);
    for (int x = 0; x < g.cols; ++x) map(x, y) = row[x] != 0 ? 1.0 : 0.0;
  }
  return map;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline std::vector<std::uint8_t> encode_png(const MapRaster& map) {
  cv::Mat g(map.height, map.width, CV_8UC1);
  for (int y = 0; y < map.height; ++y) {
    auto* row = g.ptr<std::uint8_t>(y);
    for (int x = 0; x < map.width; ++x) row[x] = to_byte(map(x, y));
  }
  std::vector<std::uint8_t> bytes;
  if (!cv::imencode(".png", g, bytes)) throw InputError("PNG encoding failed");
  return bytes;
}

inline void encode_rgb_png(const RgbImage& img, std::vector<std::uint8_t>& bytes) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) row[x] = {img(x, y)[2], img(x, y)[1], img(x, y)[0]};
  }
  if (!cv::imencode(".png", bgr, bytes)) throw InputError("PNG encoding failed");
}

/// Writes to a sibling temporary file, then renames over the destination.
inline void write_atomic(const fs::path& path, const void* data, std::size_t size) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_text(const fs::path& path, const std::string& text) { write_atomic(path, text.data(), text.size()); }

inline void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_atomic(path, bytes.data(), bytes.size());
}

inline void write_map_png(const fs::path& path, const MapRaster& map) { write_bytes(path, encode_png(map)); }

inline void write_rgb_png(const fs::path& path, const RgbImage& img) {
  std::vector<std::uint8_t> bytes;
  encode_rgb_png(img, bytes);
  write_bytes(path, bytes);
}

}  // namespace arbiter::io
