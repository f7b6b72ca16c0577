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
#include <span>
#include <string>
#include <vector>

#include "arbiter/em.hpp"
#include "arbiter/expertise.hpp"
#include "arbiter/knowledge.hpp"
#include "arbiter/otsu.hpp"
#include "arbiter/raster.hpp"

namespace arbiter {

/// Every tunable of the pipeline with its default.
struct FusionConfig {
  int superpixels = 400;
  double compactness = 10.0;
  int slic_iterations = 10;
  int clusters = 3;
  double theta = 0.25;
  int propagation_iterations = 5;
  int generations = 5;
  double lambda = 0.1;
  std::vector<double> alpha_thresholds = default_alpha_thresholds();
  double logit_clamp = 1e-4;
  double smoothing = 1e-6;
  ExpertiseMode mode = ExpertiseMode::stats;
  double fixed_log_weight = 0.0;
  KnowledgeSource knowledge = KnowledgeSource::boundary;
  std::uint64_t seed = 42;
  EmParams em;

  void validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("invalid configuration: " + what); };
    if (superpixels < 2) fail("superpixels must be >= 2");
    if (!(compactness > 0.0)) fail("compactness must be positive");
    if (slic_iterations < 1) fail("slic_iterations must be >= 1");
    if (clusters < 1) fail("clusters must be >= 1");
    if (!(theta > 0.0)) fail("theta must be positive");
    if (propagation_iterations < 0) fail("propagation_iterations must be >= 0");
    if (generations < 0) fail("generations must be >= 0");
    if (!(lambda > 0.0 && lambda <= 1.0)) fail("lambda must lie in (0,1]");
    if (alpha_thresholds.empty()) fail("alpha_thresholds must not be empty");
    if (!(logit_clamp > 0.0 && logit_clamp < 0.5)) fail("logit_clamp must lie in (0,0.5)");
    if (!(smoothing > 0.0)) fail("smoothing must be positive");
    if (em.max_rounds < 1 || em.inner_steps < 1 || !(em.tolerance > 0.0) || !(em.initial_step > 0.0)) {
      fail("EM parameters must be positive");
    }
  }
};

/// The P candidate maps at superpixel level with their Otsu thresholds and
/// binary maps.
struct CandidateStack {
  std::vector<SuperpixelVector> maps;
  std::vector<double> thresholds;
  std::vector<std::vector<std::uint8_t>> labels;

  static CandidateStack from_maps(std::vector<SuperpixelVector> maps) {
    if (maps.empty()) throw InputError("candidate stack needs at least one map");
    CandidateStack s;
    const std::size_t n = maps.front().size();
    for (const auto& m : maps) {
      require_same_length(m.size(), n, "candidate stack");
      for (const double v : m) {
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("candidate map values must lie in [0,1]");
      }
    }
    s.maps = std::move(maps);
    s.rethreshold();
    return s;
  }

  void rethreshold() {
    thresholds.clear();
    labels.clear();
    for (const auto& m : maps) {
      thresholds.push_back(otsu(m));
      labels.push_back(binarize(m, thresholds.back()));
    }
  }

  [[nodiscard]] std::size_t models() const { return maps.size(); }
  [[nodiscard]] std::size_t superpixels() const { return maps.empty() ? 0 : maps.front().size(); }
};

struct FusionState {
  int generation = 0;
  CandidateStack stack;
  SuperpixelVector reference;
  ExpertiseVector expertise;
  FusionConfig config;
};

/// S_Ref^t: elementwise mean of the current intensity maps.
inline SuperpixelVector update_reference(const CandidateStack& stack) { return elementwise_mean(stack.maps); }

/// AVE: normalized elementwise mean of the candidate maps.
inline SuperpixelVector average_baseline(const CandidateStack& stack) {
  return min_max_normalize(update_reference(stack));
}

inline ExpertiseVector estimate_expertise(const CandidateStack& stack, std::span<const double> reference,
                                          const FusionConfig& config, std::vector<std::string>* warnings = nullptr) {
  ExpertiseVector ev;
  ev.mode = config.mode;
  switch (config.mode) {
    case ExpertiseMode::stats:
      ev.beta = stats_beta(stack.labels, reference, config.lambda, config.smoothing, warnings);
      ev.alpha = stats_alpha(stack.labels, reference, config.alpha_thresholds, config.smoothing);
      break;
    case ExpertiseMode::latent: {
      EmResult em = em_fit(stack.labels, config.em);
      ev.beta = em.beta;
      ev.alpha = std::move(em.beta);
      ev.difficulty = std::move(em.difficulty);
      ev.posterior = std::move(em.posterior);
      ev.converged = em.converged;
      if (warnings != nullptr && !em.converged) {
        warnings->push_back("EM stopped at the round cap before converging");
      }
      break;
    }
    case ExpertiseMode::fixed:
      ev.alpha.assign(stack.models(), config.fixed_log_weight);
      ev.beta.assign(stack.models(), config.fixed_log_weight);
      break;
  }
  return ev;
}

inline double clamped_logit(double v, double eps) {
  const double c = std::clamp(v, eps, 1.0 - eps);
  return std::log(c / (1.0 - c));
}

// The logistic saturates to exactly 0 or 1 in double precision for large
// logits; states are kept strictly inside the unit interval.
inline constexpr double kStateFloor = std::numeric_limits<double>::min();
inline constexpr double kStateCeiling = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

/// One synchronous logit update of every map from a frozen snapshot:
///   s_p(n) <- sigmoid(logit(ref(n)) + w_a(p) s_p(n) + sum_{q != p} w_b(q) vote_q(n))
/// with vote_q(n) = +1 if s_q(n) >= gamma_q else -1.
inline std::vector<SuperpixelVector> ca_update(const CandidateStack& stack, std::span<const double> reference,
                                               const LogWeights& weights, double clamp_eps) {
  const std::size_t models = stack.models();
  const std::size_t n_sp = stack.superpixels();
  require_same_length(reference.size(), n_sp, "ca_update");
  require_same_length(weights.intensity.size(), models, "ca_update weights");
  require_same_length(weights.binary.size(), models, "ca_update weights");

  std::vector<double> prior(n_sp);
  for (std::size_t n = 0; n < n_sp; ++n) prior[n] = clamped_logit(reference[n], clamp_eps);

  std::vector<SuperpixelVector> next(models, SuperpixelVector(n_sp));
  for (std::size_t p = 0; p < models; ++p) {
    for (std::size_t n = 0; n < n_sp; ++n) {
      double votes = 0.0;
      for (std::size_t q = 0; q < models; ++q) {
        if (q != p) votes += weights.binary[q] * (stack.labels[q][n] ? 1.0 : -1.0);
      }
      next[p][n] = std::clamp(sigmoid(prior[n] + weights.intensity[p] * stack.maps[p][n] + votes), kStateFloor,
                              kStateCeiling);
    }
  }
  return next;
}

/// Advances one generation: logit update, Otsu refresh, new reference as the
/// candidate mean, then (optionally) expertise re-estimated against it.
inline FusionState ca_step(const FusionState& state, std::vector<std::string>* warnings = nullptr,
                           bool reestimate = true) {
  FusionState next;
  next.config = state.config;
  next.generation = state.generation + 1;
  next.stack.maps =
      ca_update(state.stack, state.reference, log_weights(state.expertise), state.config.logit_clamp);
  next.stack.rethreshold();
  next.reference = update_reference(next.stack);
  if (reestimate) {
    next.expertise = estimate_expertise(next.stack, next.reference, next.config, warnings);
  } else {
    next.expertise = state.expertise;
  }
  return next;
}

struct FusionResult {
  SuperpixelVector final_map;                  // normalized mean of the final maps
  std::vector<double> trace;                   // mean |S_Ref^t - S_Ref^{t-1}|, t = 1..T
  std::vector<SuperpixelVector> references;    // S_Ref^0..S_Ref^T
  std::vector<ExpertiseVector> expertise;      // generations 0..T-1
  std::vector<std::string> warnings;
  FusionState final_state;
};

inline double mean_abs_difference(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "mean_abs_difference");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

inline FusionState initial_state(CandidateStack stack, SuperpixelVector reference, const FusionConfig& config,
                                 std::vector<std::string>* warnings = nullptr) {
  require_same_length(reference.size(), stack.superpixels(), "fusion reference");
  FusionState s;
  s.config = config;
  s.stack = std::move(stack);
  s.reference = std::move(reference);
  if (config.generations > 0) s.expertise = estimate_expertise(s.stack, s.reference, config, warnings);
  return s;
}

/// Runs `config.generations` CA steps from S_Ref^0 = knowledge.reference.
inline FusionResult run_fusion(const CandidateStack& stack, const KnowledgeBundle& knowledge,
                               const FusionConfig& config) {
  config.validate();
  FusionResult r;
  FusionState state = initial_state(stack, knowledge.reference, config, &r.warnings);
  r.references.push_back(state.reference);
  for (int t = 0; t < config.generations; ++t) {
    r.expertise.push_back(state.expertise);
    const bool last = t + 1 == config.generations;
    FusionState next = ca_step(state, &r.warnings, !last);
    r.trace.push_back(mean_abs_difference(next.reference, state.reference));
    r.references.push_back(next.reference);
    state = std::move(next);
  }
  r.final_map = average_baseline(state.stack);
  r.final_state = std::move(state);
  return r;
}

}  // namespace arbiter
