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
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "arbiter/kmeans.hpp"
#include "arbiter/raster.hpp"

// Procedural test scenes: one elliptical object on a textured background,
// plus synthetic candidate saliency maps of controlled quality.

namespace arbiter::synthetic {

struct Scene {
  RgbImage image;
  MapRaster truth;
  std::vector<std::string> model_ids;
  std::vector<MapRaster> candidates;
};

struct SceneParams {
  int width = 160;
  int height = 120;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return detail::unit_uniform(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    // Box-Muller, one draw per call.
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

struct Ellipse {
  double cx, cy, rx, ry;
  [[nodiscard]] bool contains(double x, double y) const {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
};

struct Box {
  int x0, y0, x1, y1;  // half-open
  [[nodiscard]] bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

inline std::uint8_t channel(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); }

/// Image and ground truth for an object placed inside the given fractional
/// region. With `horizon_line` set the background has two tones split by a wavy
/// line, otherwise one shaded tone. With `distractor` set, a non-salient patch
/// of a third colour sits elsewhere and is returned through `distractor_box`.
inline Scene make_base(Rng& rng, const SceneParams& p, double fx0, double fx1, double fy0, double fy1,
                       bool horizon_line, bool distractor = false, Box* distractor_box = nullptr) {
  Scene s;
  s.image = RgbImage(p.width, p.height);
  s.truth = MapRaster(p.width, p.height);
  const double rx = rng.uniform(0.12, 0.2) * p.width;
  const double ry = rng.uniform(0.15, 0.25) * p.height;
  const double cx = rng.uniform(fx0 * p.width + rx, fx1 * p.width - rx);
  const double cy = rng.uniform(fy0 * p.height + ry, fy1 * p.height - ry);
  const Ellipse obj{cx, cy, rx, ry};

  Box patch{0, 0, 0, 0};
  if (distractor) {
    // Opposite horizontal half from the object, away from the border.
    const int pw = p.width / 7, ph = p.height / 5;
    const int x0 = cx > p.width / 2.0 ? static_cast<int>(rng.uniform(0.08, 0.3) * p.width)
                                      : static_cast<int>(rng.uniform(0.55, 0.75) * p.width);
    const int y0 = static_cast<int>(rng.uniform(0.15, 0.6) * p.height);
    patch = {x0, y0, x0 + pw, y0 + ph};
    if (distractor_box != nullptr) *distractor_box = patch;
  }

  const double sky[3] = {rng.uniform(90, 150), rng.uniform(110, 170), rng.uniform(140, 200)};
  const double ground[3] = {rng.uniform(70, 120), rng.uniform(90, 140), rng.uniform(50, 100)};
  const double object[3] = {rng.uniform(160, 220), rng.uniform(70, 120), rng.uniform(60, 110)};
  const double other[3] = {rng.uniform(180, 230), rng.uniform(170, 220), rng.uniform(60, 100)};
  const double horizon = rng.uniform(0.35, 0.65) * p.height;
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const bool in = obj.contains(x + 0.5, y + 0.5);
      s.truth(x, y) = in ? 1.0 : 0.0;
      const double* base = ground;
      if (in) base = object;
      else if (distractor && patch.contains(x, y)) base = other;
      else if (horizon_line && y < horizon + 6.0 * std::sin(phase + x * 0.08)) base = sky;
      const double shade = 12.0 * static_cast<double>(y) / p.height;
      s.image(x, y) = {channel(base[0] + shade + 8.0 * rng.normal()), channel(base[1] + shade + 8.0 * rng.normal()),
                       channel(base[2] + shade + 8.0 * rng.normal())};
    }
  }
  return s;
}

/// Candidate map: object at `hi`, background at `lo`, Gaussian noise `sigma`,
/// optionally a shifted object and a false blob at `false_level`.
struct CandidateSpec {
  double hi = 0.8;
  double lo = 0.15;
  double sigma = 0.1;
  int shift_x = 0;
  int shift_y = 0;
  std::optional<Box> false_region;
  double false_level = 0.0;
};

inline MapRaster render_candidate(Rng& rng, const Scene& s, const CandidateSpec& c) {
  MapRaster m(s.truth.width, s.truth.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const int sx = std::clamp(x - c.shift_x, 0, m.width - 1);
      const int sy = std::clamp(y - c.shift_y, 0, m.height - 1);
      double v = s.truth(sx, sy) > 0.5 ? c.hi : c.lo;
      if (c.false_region && c.false_region->contains(x, y)) v = std::max(v, c.false_level);
      // Quantize like an 8-bit map file.
      m(x, y) = std::round(std::clamp(v + c.sigma * rng.normal(), 0.0, 1.0) * 255.0) / 255.0;
    }
  }
  return m;
}

/// Object anywhere plus a distractor patch; four candidates of graded
/// quality, two of which also respond to the distractor.
inline Scene noisy_scene(std::uint64_t seed, const SceneParams& p = {}) {
  Rng rng(seed);
  Box patch{0, 0, 0, 0};
  Scene s = make_base(rng, p, 0.1, 0.9, 0.1, 0.9, true, true, &patch);
  const CandidateSpec specs[4] = {
      {.hi = 0.80, .lo = 0.15, .sigma = 0.12},
      {.hi = 0.70, .lo = 0.20, .sigma = 0.15, .shift_x = 4, .shift_y = 3, .false_region = patch, .false_level = 0.5},
      {.hi = 0.65, .lo = 0.25, .sigma = 0.18, .false_region = patch, .false_level = 0.7},
      {.hi = 0.55, .lo = 0.30, .sigma = 0.20, .shift_x = -6},
  };
  for (int k = 0; k < 4; ++k) {
    s.model_ids.push_back("m" + std::to_string(k));
    s.candidates.push_back(render_candidate(rng, s, specs[k]));
  }
  return s;
}

/// Fixed interior region that two of the three candidates wrongly mark salient.
inline Box corrupted_region(const SceneParams& p) {
  return {p.width / 10, p.height / 8, p.width * 4 / 10, p.height * 5 / 8};
}

/// Object in the right half of a single-tone background, so the boundary
/// prior is informative; candidates m1 and m2 share a strong false detection
/// in `corrupted_region`, m0 is clean.
inline Scene corrupted_scene(std::uint64_t seed, const SceneParams& p = {}) {
  Rng rng(seed);
  Scene s = make_base(rng, p, 0.5, 0.92, 0.1, 0.9, false);
  const Box bad = corrupted_region(p);
  const CandidateSpec specs[3] = {
      {.hi = 0.85, .lo = 0.10, .sigma = 0.08},
      {.hi = 0.70, .lo = 0.15, .sigma = 0.10, .false_region = bad, .false_level = 0.95},
      {.hi = 0.65, .lo = 0.15, .sigma = 0.10, .shift_x = 2, .false_region = bad, .false_level = 0.90},
  };
  for (int k = 0; k < 3; ++k) {
    s.model_ids.push_back("m" + std::to_string(k));
    s.candidates.push_back(render_candidate(rng, s, specs[k]));
  }
  return s;
}

}  // namespace arbiter::synthetic
