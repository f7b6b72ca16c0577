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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arbiter/error.hpp"

namespace arbiter {

/// Row-major 2-D grid of values.
template <class T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w <= 0 || h <= 0) throw InputError("raster dimensions must be positive");
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  T& operator()(int x, int y) { return data[index(x, y)]; }
  const T& operator()(int x, int y) const { return data[index(x, y)]; }

  template <class U>
  [[nodiscard]] bool same_shape(const Raster<U>& other) const {
    return width == other.width && height == other.height;
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Raster<Rgb>;
/// Intensity raster with values in [0,1].
using MapRaster = Raster<double>;
/// One value per superpixel.
using SuperpixelVector = std::vector<double>;

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

/// Spread below which a vector counts as constant, relative to its magnitude.
inline constexpr double kConstantSpread = 1e-12;

/// Min-max normalization into [0,1]. A constant vector, including one that
/// differs only by rounding noise, maps to all zeros.
inline std::vector<double> min_max_normalize(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  if (v.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  const double scale = std::max({1.0, std::abs(lo), std::abs(*hi_it)});
  if (!(range > kConstantSpread * scale)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp((v[i] - lo) / range, 0.0, 1.0);
  return out;
}

/// Elementwise mean of equally sized vectors.
inline std::vector<double> elementwise_mean(std::span<const std::vector<double>> maps) {
  if (maps.empty()) throw InputError("elementwise_mean: no maps");
  const std::size_t n = maps.front().size();
  std::vector<double> sum(n, 0.0);
  for (const auto& m : maps) {
    require_same_length(m.size(), n, "elementwise_mean");
    for (std::size_t i = 0; i < n; ++i) sum[i] += m[i];
  }
  const auto count = static_cast<double>(maps.size());
  for (double& s : sum) s /= count;
  return sum;
}

}  // namespace arbiter
