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

#include "arbiter/raster.hpp"

namespace arbiter {

/// CIELab triple with each channel rescaled to [0,1]:
/// L/100, (a+128)/255, (b+128)/255.
using Lab = std::array<double, 3>;

struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<Lab> pixels;

  [[nodiscard]] std::size_t size() const { return pixels.size(); }
  const Lab& operator()(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

namespace detail {

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace detail

/// sRGB (D65) to CIELab, unscaled: L in [0,100], a and b roughly in [-128,127].
inline std::array<double, 3> srgb_to_cielab(const Rgb& rgb) {
  const double r = detail::srgb_to_linear(rgb[0] / 255.0);
  const double g = detail::srgb_to_linear(rgb[1] / 255.0);
  const double b = detail::srgb_to_linear(rgb[2] / 255.0);

  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

  // D65 reference white
  const double fx = detail::lab_f(x / 0.95047);
  const double fy = detail::lab_f(y / 1.00000);
  const double fz = detail::lab_f(z / 1.08883);

  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline Lab rescale_lab(const std::array<double, 3>& lab) {
  return {std::clamp(lab[0] / 100.0, 0.0, 1.0), std::clamp((lab[1] + 128.0) / 255.0, 0.0, 1.0),
          std::clamp((lab[2] + 128.0) / 255.0, 0.0, 1.0)};
}

inline LabImage to_lab(const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0 || image.data.empty()) {
    throw InputError("to_lab: empty image");
  }
  LabImage out{image.width, image.height, {}};
  out.pixels.reserve(image.size());
  for (const Rgb& px : image.data) out.pixels.push_back(rescale_lab(srgb_to_cielab(px)));
  return out;
}

inline double lab_distance(const Lab& a, const Lab& b) {
  const double d0 = a[0] - b[0];
  const double d1 = a[1] - b[1];
  const double d2 = a[2] - b[2];
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

}  // namespace arbiter
