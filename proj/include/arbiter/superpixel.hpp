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
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "arbiter/color.hpp"
#include "arbiter/raster.hpp"

namespace arbiter {

/// Over-segmentation of an image into N connected superpixels.
struct SuperpixelGrid {
  int width = 0;
  int height = 0;
  std::vector<int> labels;                 // per pixel, in [0, count)
  int count = 0;                           // N
  std::vector<Lab> mean_lab;               // c_n
  std::vector<std::uint8_t> on_boundary;   // touches the image border
  std::vector<std::pair<int, int>> edges;  // adjacency, first < second, sorted, unique
  std::vector<int> pixel_count;

  [[nodiscard]] std::size_t pixels() const { return labels.size(); }

  /// Neighbour lists derived from `edges`.
  [[nodiscard]] std::vector<std::vector<int>> neighbours() const {
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(count));
    for (const auto& [a, b] : edges) {
      nb[static_cast<std::size_t>(a)].push_back(b);
      nb[static_cast<std::size_t>(b)].push_back(a);
    }
    return nb;
  }
};

struct SlicParams {
  int target_count = 400;
  /// Spatial weight, in canonical L* units (a colour difference of 1.0 on the
  /// rescaled Lab scale corresponds to 100).
  double compactness = 10.0;
  int iterations = 10;
};

/// Builds the grid tables (means, boundary flags, adjacency, counts) from a
/// dense labelling whose labels are already contiguous in [0, count).
inline SuperpixelGrid make_grid(const LabImage& lab, std::vector<int> labels, int count) {
  SuperpixelGrid grid;
  grid.width = lab.width;
  grid.height = lab.height;
  grid.labels = std::move(labels);
  grid.count = count;
  const auto n = static_cast<std::size_t>(count);
  std::vector<std::array<double, 3>> sums(n, {0.0, 0.0, 0.0});
  grid.pixel_count.assign(n, 0);
  grid.on_boundary.assign(n, 0);
  std::vector<std::pair<int, int>> edges;
  for (int y = 0; y < lab.height; ++y) {
    for (int x = 0; x < lab.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(lab.width) + static_cast<std::size_t>(x);
      const int l = grid.labels[i];
      const auto li = static_cast<std::size_t>(l);
      for (int c = 0; c < 3; ++c) sums[li][static_cast<std::size_t>(c)] += lab.pixels[i][static_cast<std::size_t>(c)];
      ++grid.pixel_count[li];
      if (x == 0 || y == 0 || x == lab.width - 1 || y == lab.height - 1) grid.on_boundary[li] = 1;
      if (x + 1 < lab.width) {
        const int r = grid.labels[i + 1];
        if (r != l) edges.emplace_back(std::min(l, r), std::max(l, r));
      }
      if (y + 1 < lab.height) {
        const int d = grid.labels[i + static_cast<std::size_t>(lab.width)];
        if (d != l) edges.emplace_back(std::min(l, d), std::max(l, d));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  grid.edges = std::move(edges);
  grid.mean_lab.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (grid.pixel_count[k] == 0) throw InputError("make_grid: empty superpixel label");
    const double inv = 1.0 / grid.pixel_count[k];
    grid.mean_lab[k] = {sums[k][0] * inv, sums[k][1] * inv, sums[k][2] * inv};
  }
  return grid;
}

namespace detail {

struct SlicCenter {
  double l, a, b, x, y;
};

/// Seed grid layout: ny rows by nx columns with nx * ny close to `target`.
inline std::pair<int, int> seed_layout(int target, int width, int height) {
  int ny = static_cast<int>(std::lround(std::sqrt(static_cast<double>(target) * height / width)));
  ny = std::clamp(ny, 1, height);
  int nx = static_cast<int>(std::lround(static_cast<double>(target) / ny));
  nx = std::clamp(nx, 1, width);
  return {nx, ny};
}

/// Keeps the largest 4-connected piece of every label, absorbs the remaining
/// pieces into the largest adjacent superpixel and relabels contiguously.
inline int enforce_connectivity(std::vector<int>& labels, int width, int height, int label_count) {
  const std::size_t total = labels.size();
  std::vector<int> component(total, -1);
  std::vector<int> comp_label;
  std::vector<int> comp_size;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < total; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(comp_label.size());
    const int l = labels[start];
    comp_label.push_back(l);
    int size = 0;
    stack.push_back(start);
    component[start] = id;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % static_cast<std::size_t>(width));
      const int y = static_cast<int>(i / static_cast<std::size_t>(width));
      const auto visit = [&](int nx, int ny) {
        const std::size_t j = static_cast<std::size_t>(ny) * static_cast<std::size_t>(width) + static_cast<std::size_t>(nx);
        if (component[j] < 0 && labels[j] == l) {
          component[j] = id;
          stack.push_back(j);
        }
      };
      if (x > 0) visit(x - 1, y);
      if (x + 1 < width) visit(x + 1, y);
      if (y > 0) visit(x, y - 1);
      if (y + 1 < height) visit(x, y + 1);
    }
    comp_size.push_back(size);
  }

  const std::size_t comps = comp_label.size();
  std::vector<int> best_comp(static_cast<std::size_t>(label_count), -1);
  for (std::size_t c = 0; c < comps; ++c) {
    int& best = best_comp[static_cast<std::size_t>(comp_label[c])];
    if (best < 0 || comp_size[c] > comp_size[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  std::vector<std::uint8_t> kept(comps, 0);
  std::vector<int> label_size(static_cast<std::size_t>(label_count), 0);
  for (int l = 0; l < label_count; ++l) {
    const int c = best_comp[static_cast<std::size_t>(l)];
    if (c >= 0) {
      kept[static_cast<std::size_t>(c)] = 1;
      label_size[static_cast<std::size_t>(l)] = comp_size[static_cast<std::size_t>(c)];
    }
  }

  // Component adjacency.
  std::vector<std::vector<int>> comp_nb(comps);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
      const int c = component[i];
      if (x + 1 < width && component[i + 1] != c) {
        comp_nb[static_cast<std::size_t>(c)].push_back(component[i + 1]);
        comp_nb[static_cast<std::size_t>(component[i + 1])].push_back(c);
      }
      if (y + 1 < height && component[i + static_cast<std::size_t>(width)] != c) {
        const int d = component[i + static_cast<std::size_t>(width)];
        comp_nb[static_cast<std::size_t>(c)].push_back(d);
        comp_nb[static_cast<std::size_t>(d)].push_back(c);
      }
    }
  }

  // Orphans adjacent only to other orphans are resolved in later sweeps.
  bool pending = true;
  while (pending) {
    pending = false;
    for (std::size_t c = 0; c < comps; ++c) {
      if (kept[c]) continue;
      int target = -1;
      for (const int nb : comp_nb[c]) {
        if (!kept[static_cast<std::size_t>(nb)]) continue;
        const int l = comp_label[static_cast<std::size_t>(nb)];
        if (target < 0 || label_size[static_cast<std::size_t>(l)] > label_size[static_cast<std::size_t>(target)] ||
            (label_size[static_cast<std::size_t>(l)] == label_size[static_cast<std::size_t>(target)] && l < target)) {
          target = l;
        }
      }
      if (target < 0) {
        pending = true;
        continue;
      }
      comp_label[c] = target;
      label_size[static_cast<std::size_t>(target)] += comp_size[c];
      kept[c] = 1;
    }
  }

  // Contiguous relabel in raster order of first appearance.
  std::vector<int> remap(static_cast<std::size_t>(label_count), -1);
  int next = 0;
  for (std::size_t i = 0; i < total; ++i) {
    const int l = comp_label[static_cast<std::size_t>(component[i])];
    int& r = remap[static_cast<std::size_t>(l)];
    if (r < 0) r = next++;
    labels[i] = r;
  }
  return next;
}

}  // namespace detail

/// SLIC over-segmentation with grid-seeded centres. Deterministic.
inline SuperpixelGrid slic_segment(const LabImage& lab, const SlicParams& params = {}) {
  const int width = lab.width;
  const int height = lab.height;
  const auto total = static_cast<long long>(width) * height;
  if (width <= 0 || height <= 0) throw InputError("slic_segment: empty image");
  if (params.target_count < 2 || params.target_count > total) {
    throw ConfigError("slic_segment: superpixel count must lie in [2, pixel count], got " +
                      std::to_string(params.target_count));
  }
  if (!(params.compactness > 0.0) || params.iterations < 1) {
    throw ConfigError("slic_segment: compactness and iterations must be positive");
  }

  const auto [nx, ny] = detail::seed_layout(params.target_count, width, height);
  const double step_x = static_cast<double>(width) / nx;
  const double step_y = static_cast<double>(height) / ny;
  const double step = std::sqrt(static_cast<double>(total) / (static_cast<double>(nx) * ny));

  std::vector<detail::SlicCenter> centers;
  centers.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  const bool perturb = step_x >= 3.0 && step_y >= 3.0;
  const auto gradient = [&](int x, int y) {
    if (x <= 0 || y <= 0 || x >= width - 1 || y >= height - 1) return std::numeric_limits<double>::infinity();
    const double gx = lab_distance(lab(x + 1, y), lab(x - 1, y));
    const double gy = lab_distance(lab(x, y + 1), lab(x, y - 1));
    return gx * gx + gy * gy;
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // Cell centre in pixel-index coordinates; kept fractional unless the
      // gradient perturbation moves the seed.
      double fx = (i + 0.5) * step_x - 0.5;
      double fy = (j + 0.5) * step_y - 0.5;
      const int cx = std::clamp(static_cast<int>(std::floor(fx + 0.5)), 0, width - 1);
      const int cy = std::clamp(static_cast<int>(std::floor(fy + 0.5)), 0, height - 1);
      int bx = cx, by = cy;
      if (perturb) {
        // Move the seed to the lowest-gradient position of its 3x3 neighbourhood.
        double best = gradient(cx, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const double g = gradient(cx + dx, cy + dy);
            if (g < best) {
              best = g;
              bx = cx + dx;
              by = cy + dy;
            }
          }
        }
      }
      if (bx != cx || by != cy) {
        fx = bx;
        fy = by;
      }
      const Lab& c = lab(bx, by);
      centers.push_back({c[0], c[1], c[2], fx, fy});
    }
  }

  const double spatial_weight = params.compactness / 100.0 / step;
  const double sw2 = spatial_weight * spatial_weight;
  const auto window = static_cast<int>(std::ceil(2.0 * std::max(step_x, step_y)));
  const std::size_t k_count = centers.size();
  std::vector<int> labels(static_cast<std::size_t>(total), 0);
  std::vector<double> dist(static_cast<std::size_t>(total));

  // Initial assignment: seed-grid cell, so no pixel is ever unlabelled.
  for (int y = 0; y < height; ++y) {
    const int j = std::min(ny - 1, static_cast<int>(y / step_y));
    for (int x = 0; x < width; ++x) {
      const int i = std::min(nx - 1, static_cast<int>(x / step_x));
      labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] = j * nx + i;
    }
  }

  std::vector<std::array<double, 5>> acc(k_count);
  std::vector<int> members(k_count);
  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - window);
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(c.x)) + window);
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - window);
      const int y1 = std::min(height - 1, static_cast<int>(std::ceil(c.y)) + window);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
          const Lab& p = lab.pixels[idx];
          const double dl = p[0] - c.l, da = p[1] - c.a, db = p[2] - c.b;
          const double dx = x - c.x, dy = y - c.y;
          const double d = dl * dl + da * da + db * db + (dx * dx + dy * dy) * sw2;
          if (d < dist[idx]) {
            dist[idx] = d;
            labels[idx] = static_cast<int>(k);
          }
        }
      }
    }
    std::fill(acc.begin(), acc.end(), std::array<double, 5>{0, 0, 0, 0, 0});
    std::fill(members.begin(), members.end(), 0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
        const auto k = static_cast<std::size_t>(labels[idx]);
        const Lab& p = lab.pixels[idx];
        acc[k][0] += p[0];
        acc[k][1] += p[1];
        acc[k][2] += p[2];
        acc[k][3] += x;
        acc[k][4] += y;
        ++members[k];
      }
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      if (members[k] == 0) continue;
      const double inv = 1.0 / members[k];
      centers[k] = {acc[k][0] * inv, acc[k][1] * inv, acc[k][2] * inv, acc[k][3] * inv, acc[k][4] * inv};
    }
  }

  const int count = detail::enforce_connectivity(labels, width, height, static_cast<int>(k_count));
  return make_grid(lab, std::move(labels), count);
}

/// Per-superpixel arithmetic mean of a pixel map.
inline SuperpixelVector pool(const MapRaster& map, const SuperpixelGrid& grid) {
  if (map.width != grid.width || map.height != grid.height) {
    throw InputError("pool: map is " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                     ", grid is " + std::to_string(grid.width) + "x" + std::to_string(grid.height));
  }
  // Deviations from each superpixel's first pixel are accumulated so that
  // superpixel-constant data pools back to the identical value.
  const auto n = static_cast<std::size_t>(grid.count);
  SuperpixelVector first(n, 0.0);
  std::vector<std::uint8_t> seen(n, 0);
  SuperpixelVector deviation(n, 0.0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto k = static_cast<std::size_t>(grid.labels[i]);
    if (!seen[k]) {
      seen[k] = 1;
      first[k] = map.data[i];
    } else {
      deviation[k] += map.data[i] - first[k];
    }
  }
  SuperpixelVector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = std::clamp(first[k] + deviation[k] / grid.pixel_count[k], 0.0, 1.0);
  }
  return out;
}

/// Piecewise-constant rendering of a superpixel vector.
inline MapRaster unpool(std::span<const double> values, const SuperpixelGrid& grid) {
  require_same_length(values.size(), static_cast<std::size_t>(grid.count), "unpool");
  MapRaster out(grid.width, grid.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = values[static_cast<std::size_t>(grid.labels[i])];
  return out;
}

}  // namespace arbiter
