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
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arbiter/raster.hpp"

namespace arbiter {

/// F-measure from precision and recall; 0 when both vanish.
inline double f_measure_from(double precision, double recall, double beta2 = 0.3) {
  const double denom = beta2 * precision + recall;
  if (!(denom > 0.0)) return 0.0;
  return (1.0 + beta2) * precision * recall / denom;
}

/// Adaptive-threshold F-measure. The map is binarized at min(2 * mean, 1);
/// an all-zero map predicts nothing. Ground truth pixels > 0.5 are foreground.
/// Returns nullopt when the ground truth has no foreground.
inline std::optional<double> f_measure(const MapRaster& sal, const MapRaster& gt, double beta2 = 0.3) {
  if (!sal.same_shape(gt)) throw InputError("f_measure: saliency and ground truth differ in size");
  double sum = 0.0, peak = 0.0;
  for (const double v : sal.data) {
    sum += v;
    peak = std::max(peak, v);
  }
  const double threshold = std::min(2.0 * sum / static_cast<double>(sal.size()), 1.0);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < sal.size(); ++i) {
    const bool predicted = peak > 0.0 && sal.data[i] >= threshold;
    const bool truth = gt.data[i] > 0.5;
    if (predicted && truth) ++tp;
    else if (predicted) ++fp;
    else if (truth) ++fn;
  }
  if (tp + fn == 0) return std::nullopt;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return f_measure_from(precision, recall, beta2);
}

/// Mean absolute per-pixel difference.
inline double mae(const MapRaster& sal, const MapRaster& gt) {
  if (!sal.same_shape(gt)) throw InputError("mae: saliency and ground truth differ in size");
  double sum = 0.0;
  for (std::size_t i = 0; i < sal.size(); ++i) sum += std::abs(sal.data[i] - gt.data[i]);
  return sum / static_cast<double>(sal.size());
}

struct ConvergenceSummary {
  std::vector<double> series;
  bool converged = false;
};

inline ConvergenceSummary convergence_trace(std::span<const double> trace, double tolerance = 0.01) {
  ConvergenceSummary s;
  s.series.assign(trace.begin(), trace.end());
  s.converged = !s.series.empty() && s.series.back() <= tolerance;
  return s;
}

struct ImageScore {
  std::string image;
  std::string method;
  double f_measure = 0.0;
  double mae = 0.0;
};

struct MethodSummary {
  std::string method;
  double mean_f_measure = 0.0;
  double mean_mae = 0.0;
  std::size_t images = 0;
};

struct EvalReport {
  std::vector<ImageScore> rows;
  std::vector<MethodSummary> aggregates;  // first-appearance order of methods
  std::vector<std::string> skipped;       // images with empty ground truth
};

inline EvalReport make_report(std::vector<ImageScore> rows, std::vector<std::string> skipped = {}) {
  if (rows.empty()) throw InputError("report: no evaluated images");
  EvalReport r;
  for (const auto& row : rows) {
    auto it = std::find_if(r.aggregates.begin(), r.aggregates.end(),
                           [&](const MethodSummary& m) { return m.method == row.method; });
    if (it == r.aggregates.end()) {
      r.aggregates.push_back({row.method, 0.0, 0.0, 0});
      it = std::prev(r.aggregates.end());
    }
    it->mean_f_measure += row.f_measure;
    it->mean_mae += row.mae;
    ++it->images;
  }
  for (auto& m : r.aggregates) {
    m.mean_f_measure /= static_cast<double>(m.images);
    m.mean_mae /= static_cast<double>(m.images);
  }
  r.rows = std::move(rows);
  r.skipped = std::move(skipped);
  return r;
}

inline std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// image,method,f_measure,mae with one `__mean__` row per method at the end.
inline std::string to_csv(const EvalReport& report) {
  std::string out = "image,method,f_measure,mae\n";
  for (const auto& r : report.rows) {
    out += r.image + "," + r.method + "," + format_fixed(r.f_measure) + "," + format_fixed(r.mae) + "\n";
  }
  for (const auto& m : report.aggregates) {
    out += "__mean__," + m.method + "," + format_fixed(m.mean_f_measure) + "," + format_fixed(m.mean_mae) + "\n";
  }
  return out;
}

}  // namespace arbiter
