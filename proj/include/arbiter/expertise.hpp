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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arbiter/error.hpp"
#include "arbiter/raster.hpp"

namespace arbiter {

enum class ExpertiseMode {
  stats,   // likelihood ratios against the reference map
  latent,  // EM over labels, model skill and superpixel difficulty
  fixed,   // one configured log-weight for every model
};

inline std::string_view to_string(ExpertiseMode m) {
  switch (m) {
    case ExpertiseMode::stats: return "stats";
    case ExpertiseMode::latent: return "latent";
    case ExpertiseMode::fixed: return "fixed";
  }
  return "?";
}

/// Per-model expertise, plus per-superpixel difficulty and posterior in latent mode.
struct ExpertiseVector {
  ExpertiseMode mode = ExpertiseMode::stats;
  std::vector<double> alpha;       // intensity-map expertise
  std::vector<double> beta;        // binary-map expertise
  std::vector<double> difficulty;  // pi_n (latent only)
  std::vector<double> posterior;   // p(l_n = 1) (latent only)
  bool converged = true;
};

struct LogWeights {
  std::vector<double> intensity;  // multiplies s_p
  std::vector<double> binary;     // multiplies the +/-1 vote
};

/// Weights entering the logit update. Statistics mode takes logarithms of the
/// likelihood ratios; latent and fixed modes already live on the log-odds
/// scale and are used as they are.
inline LogWeights log_weights(const ExpertiseVector& ev) {
  LogWeights w;
  if (ev.mode == ExpertiseMode::stats) {
    w.intensity.reserve(ev.alpha.size());
    w.binary.reserve(ev.beta.size());
    for (const double a : ev.alpha) {
      if (!(a > 0.0)) throw InputError("log_weights: non-positive alpha in statistics mode");
      w.intensity.push_back(std::log(a));
    }
    for (const double b : ev.beta) {
      if (!(b > 0.0)) throw InputError("log_weights: non-positive beta in statistics mode");
      w.binary.push_back(std::log(b));
    }
  } else {
    w.intensity = ev.alpha;
    w.binary = ev.beta;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Statistics-based expertise

struct RatioCounts {
  std::size_t total = 0;
  std::size_t foreground = 0;          // reference >= lambda
  std::size_t labelled_foreground = 0; // iota = 1 and reference foreground
  std::size_t labelled_background = 0; // iota = 1 and reference background
};

inline RatioCounts count_agreement(std::span<const std::uint8_t> labels, std::span<const double> reference,
                                   double lambda) {
  require_same_length(labels.size(), reference.size(), "expertise");
  RatioCounts c;
  c.total = labels.size();
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const bool fg = reference[n] >= lambda;
    c.foreground += fg ? 1 : 0;
    if (labels[n]) (fg ? c.labelled_foreground : c.labelled_background) += 1;
  }
  return c;
}

/// P(iota=1 | F) / P(iota=1 | not F), every fraction smoothed by +eps.
inline double smoothed_ratio(const RatioCounts& c, double eps) {
  const auto n = static_cast<double>(c.total);
  const double p_f = static_cast<double>(c.foreground) / n + eps;
  const double p_b = static_cast<double>(c.total - c.foreground) / n + eps;
  const double joint_f = static_cast<double>(c.labelled_foreground) / n + eps;
  const double joint_b = static_cast<double>(c.labelled_background) / n + eps;
  return (joint_f / p_f) / (joint_b / p_b);
}

inline bool has_foreground(std::span<const double> reference, double lambda) {
  for (const double r : reference) {
    if (r >= lambda) return true;
  }
  return false;
}

/// Binary-map expertise beta_p for every model.
inline std::vector<double> stats_beta(std::span<const std::vector<std::uint8_t>> labels,
                                      std::span<const double> reference, double lambda = 0.1, double eps = 1e-6,
                                      std::vector<std::string>* warnings = nullptr) {
  if (warnings != nullptr && !has_foreground(reference, lambda)) {
    warnings->push_back("reference map lies entirely below lambda; expertise ratios are smoothing-dominated");
  }
  std::vector<double> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(smoothed_ratio(count_agreement(l, reference, lambda), eps));
  return out;
}

/// Reference thresholds 0.1, 0.2, ..., 0.9.
inline std::vector<double> default_alpha_thresholds() {
  std::vector<double> t;
  for (int j = 1; j <= 9; ++j) t.push_back(j / 10.0);
  return t;
}

/// Intensity-map expertise alpha_p: mean of the smoothed ratios obtained with
/// the reference thresholded at each level.
inline std::vector<double> stats_alpha(std::span<const std::vector<std::uint8_t>> labels,
                                       std::span<const double> reference, std::span<const double> thresholds,
                                       double eps = 1e-6) {
  if (thresholds.empty()) throw ConfigError("stats_alpha: empty threshold set");
  std::vector<double> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    double sum = 0.0;
    for (const double t : thresholds) sum += smoothed_ratio(count_agreement(l, reference, t), eps);
    out.push_back(sum / static_cast<double>(thresholds.size()));
  }
  return out;
}

}  // namespace arbiter
