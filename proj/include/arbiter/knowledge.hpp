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
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "arbiter/kmeans.hpp"
#include "arbiter/raster.hpp"
#include "arbiter/superpixel.hpp"

namespace arbiter {

enum class KnowledgeSource { boundary, file };

inline std::string_view to_string(KnowledgeSource s) { return s == KnowledgeSource::boundary ? "boundary" : "file"; }

/// Reference-generator outputs, all of length N.
struct KnowledgeBundle {
  SuperpixelVector external;             // S_Ext
  std::vector<std::uint8_t> majority;    // S_Maj
  SuperpixelVector consensus;            // S_Con = S_Ext * S_Maj
  SuperpixelVector reference;            // propagated S_Con, normalized
  KnowledgeSource source = KnowledgeSource::boundary;
};

// ---------------------------------------------------------------------------
// External knowledge

/// Unnormalized boundary-prior score: for every superpixel, the smallest mean
/// Lab distance to the members of one k-means cluster of border superpixels.
inline SuperpixelVector boundary_knowledge_raw(const SuperpixelGrid& grid, int clusters, std::uint64_t seed) {
  std::vector<int> border;
  for (int n = 0; n < grid.count; ++n) {
    if (grid.on_boundary[static_cast<std::size_t>(n)]) border.push_back(n);
  }
  if (border.empty()) throw InputError("boundary_knowledge: grid has no boundary superpixels");
  if (clusters < 1) throw ConfigError("boundary_knowledge: K must be >= 1");

  std::vector<Lab> seeds;
  seeds.reserve(border.size());
  for (const int b : border) seeds.push_back(grid.mean_lab[static_cast<std::size_t>(b)]);
  const KMeansResult km = kmeans(seeds, {.clusters = clusters, .seed = seed});
  const std::size_t k_count = km.centroids.size();

  std::vector<std::vector<std::size_t>> members(k_count);
  for (std::size_t i = 0; i < seeds.size(); ++i) members[static_cast<std::size_t>(km.assignment[i])].push_back(i);

  SuperpixelVector raw(static_cast<std::size_t>(grid.count));
  for (std::size_t n = 0; n < raw.size(); ++n) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& cluster : members) {
      if (cluster.empty()) continue;
      double sum = 0.0;
      for (const std::size_t i : cluster) sum += lab_distance(grid.mean_lab[n], seeds[i]);
      best = std::min(best, sum / static_cast<double>(cluster.size()));
    }
    raw[n] = best;
  }
  return raw;
}

inline SuperpixelVector boundary_knowledge(const SuperpixelGrid& grid, int clusters = 3, std::uint64_t seed = 42) {
  return min_max_normalize(boundary_knowledge_raw(grid, clusters, seed));
}

/// External knowledge from a precomputed pixel map (pooled, then normalized).
inline SuperpixelVector external_knowledge(const MapRaster& map, const SuperpixelGrid& grid) {
  return min_max_normalize(pool(map, grid));
}

// ---------------------------------------------------------------------------
// Consensus

/// 1 where strictly more than half of the binary maps vote foreground.
inline std::vector<std::uint8_t> majority_vote(std::span<const std::vector<std::uint8_t>> votes) {
  if (votes.empty()) throw InputError("majority_vote: no maps");
  const std::size_t n = votes.front().size();
  std::vector<int> tally(n, 0);
  for (const auto& v : votes) {
    require_same_length(v.size(), n, "majority_vote");
    for (std::size_t i = 0; i < n; ++i) tally[i] += v[i] ? 1 : 0;
  }
  std::vector<std::uint8_t> out(n);
  const auto p = static_cast<int>(votes.size());
  for (std::size_t i = 0; i < n; ++i) out[i] = 2 * tally[i] > p ? 1 : 0;
  return out;
}

inline SuperpixelVector consensus(std::span<const double> external, std::span<const std::uint8_t> majority) {
  require_same_length(external.size(), majority.size(), "consensus");
  SuperpixelVector out(external.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = external[i] * static_cast<double>(majority[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Geodesic affinity

struct WeightedEdge {
  int a = 0;
  int b = 0;
  double cost = 0.0;
};

/// Dense all-pairs geodesic distances plus the Gaussian affinity built on them.
struct AffinityGraph {
  int count = 0;
  double threshold = 0.0;  // a: mean adjacent colour distance
  double theta = 0.25;
  std::vector<WeightedEdge> edges;  // includes bridging edges
  std::vector<double> geodesic;     // N*N row-major
  std::vector<double> affinity;     // N*N row-major, w_nm
  std::vector<double> degree;       // D_nn

  [[nodiscard]] double distance(int n, int m) const {
    return geodesic[static_cast<std::size_t>(n) * static_cast<std::size_t>(count) + static_cast<std::size_t>(m)];
  }
  [[nodiscard]] double weight(int n, int m) const {
    return affinity[static_cast<std::size_t>(n) * static_cast<std::size_t>(count) + static_cast<std::size_t>(m)];
  }
};

/// Single-source shortest paths over non-negative edge costs.
inline std::vector<double> dijkstra(int count, const std::vector<std::vector<std::pair<int, double>>>& adj, int source) {
  std::vector<double> dist(static_cast<std::size_t>(count), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(source)] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& [v, w] : adj[static_cast<std::size_t>(u)]) {
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return dist;
}

/// Symmetric all-pairs distances; entry (n,m) with n < m comes from the
/// search rooted at n and is mirrored.
inline std::vector<double> all_pairs_geodesic(int count, std::span<const WeightedEdge> edges) {
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(count));
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.a)].emplace_back(e.b, e.cost);
    adj[static_cast<std::size_t>(e.b)].emplace_back(e.a, e.cost);
  }
  const auto n = static_cast<std::size_t>(count);
  std::vector<double> g(n * n, 0.0);
  for (int s = 0; s < count; ++s) {
    const auto dist = dijkstra(count, adj, s);
    for (auto m = static_cast<std::size_t>(s) + 1; m < n; ++m) {
      g[static_cast<std::size_t>(s) * n + m] = dist[m];
      g[m * n + static_cast<std::size_t>(s)] = dist[m];
    }
  }
  return g;
}

namespace detail {

inline int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

}  // namespace detail

/// Edge costs max(colour distance - a, 0) over the superpixel adjacency, with
/// disconnected components joined through their closest-colour pair.
inline std::vector<WeightedEdge> geodesic_edges(const SuperpixelGrid& grid, double& threshold) {
  const int count = grid.count;
  double sum = 0.0;
  for (const auto& [a, b] : grid.edges) {
    sum += lab_distance(grid.mean_lab[static_cast<std::size_t>(a)], grid.mean_lab[static_cast<std::size_t>(b)]);
  }
  threshold = grid.edges.empty() ? 0.0 : sum / static_cast<double>(grid.edges.size());

  std::vector<WeightedEdge> edges;
  edges.reserve(grid.edges.size());
  std::vector<int> parent(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) parent[static_cast<std::size_t>(i)] = i;
  const auto cost = [&](int a, int b) {
    const double d = lab_distance(grid.mean_lab[static_cast<std::size_t>(a)], grid.mean_lab[static_cast<std::size_t>(b)]);
    return std::max(d - threshold, 0.0);
  };
  for (const auto& [a, b] : grid.edges) {
    edges.push_back({a, b, cost(a, b)});
    parent[static_cast<std::size_t>(detail::find_root(parent, a))] = detail::find_root(parent, b);
  }

  // Grow the component of superpixel 0 until it spans the graph.
  for (;;) {
    const int root0 = detail::find_root(parent, 0);
    int best_u = -1, best_v = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int u = 0; u < count; ++u) {
      if (detail::find_root(parent, u) != root0) continue;
      for (int v = 0; v < count; ++v) {
        if (detail::find_root(parent, v) == root0) continue;
        const double d = lab_distance(grid.mean_lab[static_cast<std::size_t>(u)], grid.mean_lab[static_cast<std::size_t>(v)]);
        if (d < best_d) {
          best_d = d;
          best_u = u;
          best_v = v;
        }
      }
    }
    if (best_u < 0) break;
    edges.push_back({std::min(best_u, best_v), std::max(best_u, best_v), cost(best_u, best_v)});
    parent[static_cast<std::size_t>(detail::find_root(parent, best_v))] = root0;
  }
  return edges;
}

inline AffinityGraph build_affinity(const SuperpixelGrid& grid, double theta = 0.25) {
  if (!(theta > 0.0)) throw ConfigError("build_affinity: theta must be positive");
  AffinityGraph g;
  g.count = grid.count;
  g.theta = theta;
  g.edges = geodesic_edges(grid, g.threshold);
  g.geodesic = all_pairs_geodesic(grid.count, g.edges);
  const auto n = static_cast<std::size_t>(grid.count);
  g.affinity.resize(n * n);
  g.degree.assign(n, 0.0);
  const double denom = 2.0 * theta * theta;
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = g.geodesic[i * n + j];
      const double w = std::exp(-d * d / denom);
      g.affinity[i * n + j] = w;
      deg += w;
    }
    g.degree[i] = deg;
  }
  return g;
}

/// `iterations` applications of D^-1 W without normalization.
inline SuperpixelVector propagate_raw(std::span<const double> seed, const AffinityGraph& graph, int iterations) {
  require_same_length(seed.size(), static_cast<std::size_t>(graph.count), "propagate");
  if (iterations < 0) throw ConfigError("propagate: iteration count must be >= 0");
  const auto n = static_cast<std::size_t>(graph.count);
  SuperpixelVector cur(seed.begin(), seed.end());
  SuperpixelVector next(n);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = graph.affinity.data() + i * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * cur[j];
      next[i] = acc / graph.degree[i];
    }
    std::swap(cur, next);
  }
  return cur;
}

inline SuperpixelVector propagate(std::span<const double> seed, const AffinityGraph& graph, int iterations = 5) {
  return min_max_normalize(propagate_raw(seed, graph, iterations));
}

/// Full reference generator. `external` must already be normalized to [0,1];
/// pass the boundary prior or a file-loaded map.
inline KnowledgeBundle build_reference(std::span<const std::vector<std::uint8_t>> binary_maps,
                                       SuperpixelVector external, KnowledgeSource source,
                                       const AffinityGraph& graph, int propagation_iterations) {
  KnowledgeBundle k;
  k.source = source;
  k.external = std::move(external);
  k.majority = majority_vote(binary_maps);
  k.consensus = consensus(k.external, k.majority);
  k.reference = propagate(k.consensus, graph, propagation_iterations);
  return k;
}

}  // namespace arbiter
