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
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "arbiter/color.hpp"

namespace arbiter {

struct KMeansParams {
  int clusters = 3;
  int max_iterations = 100;
  double tolerance = 1e-6;
  std::uint64_t seed = 42;
};

struct KMeansResult {
  std::vector<Lab> centroids;
  std::vector<int> assignment;
};

namespace detail {

/// Uniform double in [0,1) from the top 53 bits; platform independent.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double squared_distance(const Lab& a, const Lab& b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

inline int nearest(const Lab& p, std::span<const Lab> centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const double d = squared_distance(p, centroids[k]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding. `clusters` is reduced to the
/// number of points when fewer are given.
inline KMeansResult kmeans(std::span<const Lab> points, KMeansParams params) {
  if (points.empty()) throw InputError("kmeans: no points");
  if (params.clusters < 1) throw ConfigError("kmeans: cluster count must be >= 1");
  const std::size_t n = points.size();
  const auto k = std::min(static_cast<std::size_t>(params.clusters), n);
  std::mt19937_64 rng(params.seed);

  KMeansResult result;
  const auto pick_uniform = [&] { return std::min(n - 1, static_cast<std::size_t>(detail::unit_uniform(rng) * n)); };
  result.centroids.push_back(points[pick_uniform()]);
  std::vector<double> d2(n);
  while (result.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Lab& c : result.centroids) best = std::min(best, detail::squared_distance(points[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t chosen = n - 1;
    if (total > 0.0) {
      const double target = detail::unit_uniform(rng) * total;
      double run = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (run > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick_uniform();
    }
    result.centroids.push_back(points[chosen]);
  }

  result.assignment.assign(n, 0);
  std::vector<Lab> sums(k);
  std::vector<int> counts(k);
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) result.assignment[i] = detail::nearest(points[i], result.centroids);
    std::fill(sums.begin(), sums.end(), Lab{0.0, 0.0, 0.0});
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignment[i]);
      for (std::size_t ch = 0; ch < 3; ++ch) sums[c][ch] += points[i][ch];
      ++counts[c];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      const Lab next{sums[c][0] / counts[c], sums[c][1] / counts[c], sums[c][2] / counts[c]};
      shift = std::max(shift, lab_distance(next, result.centroids[c]));
      result.centroids[c] = next;
    }
    if (shift < params.tolerance) break;
  }
  for (std::size_t i = 0; i < n; ++i) result.assignment[i] = detail::nearest(points[i], result.centroids);
  return result;
}

}  // namespace arbiter
