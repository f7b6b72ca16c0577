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
#include <utility>
#include <vector>

#include "arbiter/error.hpp"

// Latent-variable expertise. Each model p has a skill beta_p in (-inf, inf),
// each superpixel n a difficulty pi_n > 0 parameterized as 1/pi_n = exp(u_n).
// A model labels a superpixel correctly with probability
//   sigmoid(beta_p / pi_n) = sigmoid(beta_p * exp(u_n)).
// Gaussian priors N(1, 1) sit on beta_p and u_n (MAP-EM); the class prior is
// uniform.

namespace arbiter {

struct EmParams {
  int max_rounds = 50;
  double tolerance = 1e-6;
  int inner_steps = 25;
  double initial_step = 0.1;
  int max_halvings = 40;
  double prior_mean = 1.0;
  double prior_std = 1.0;
};

struct EmResult {
  std::vector<double> beta;        // per model
  std::vector<double> difficulty;  // pi_n
  std::vector<double> log_inverse_difficulty;  // u_n
  std::vector<double> posterior;   // p(l_n = 1 | labels)
  std::vector<double> objective;   // penalized log-likelihood after init and each round
  int rounds = 0;
  bool converged = false;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(sigmoid(z)) without overflow.
inline double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

/// Probability that a model of skill beta labels a superpixel of the given
/// difficulty correctly. Zero difficulty is always labelled correctly.
inline double correct_label_probability(double beta, double difficulty) {
  if (difficulty == 0.0) return 1.0;
  return sigmoid(beta / difficulty);
}

namespace detail {

struct EmProblem {
  std::size_t models;
  std::size_t items;
  std::span<const std::vector<std::uint8_t>> labels;
  const EmParams& params;

  [[nodiscard]] double log_prior(std::span<const double> beta, std::span<const double> u) const {
    const double inv_var = 1.0 / (params.prior_std * params.prior_std);
    double lp = 0.0;
    for (const double b : beta) lp -= 0.5 * (b - params.prior_mean) * (b - params.prior_mean) * inv_var;
    for (const double x : u) lp -= 0.5 * (x - params.prior_mean) * (x - params.prior_mean) * inv_var;
    return lp;
  }

  /// Log-likelihoods of item n's labels under l_n = 1 and l_n = 0.
  [[nodiscard]] std::pair<double, double> class_log_likelihoods(std::span<const double> beta, double scale,
                                                                std::size_t n) const {
    double ll1 = 0.0, ll0 = 0.0;
    for (std::size_t p = 0; p < models; ++p) {
      const double z = beta[p] * scale;
      const double right = log_sigmoid(z);
      const double wrong = right - z;
      if (labels[p][n]) {
        ll1 += right;
        ll0 += wrong;
      } else {
        ll1 += wrong;
        ll0 += right;
      }
    }
    return {ll1, ll0};
  }

  /// Marginal log-likelihood plus log-prior; the quantity EM increases.
  [[nodiscard]] double objective(std::span<const double> beta, std::span<const double> u) const {
    double total = log_prior(beta, u);
    for (std::size_t n = 0; n < items; ++n) {
      const auto [ll1, ll0] = class_log_likelihoods(beta, std::exp(u[n]), n);
      const double hi = std::max(ll1, ll0);
      total += std::log(0.5) + hi + std::log(std::exp(ll1 - hi) + std::exp(ll0 - hi));
    }
    return total;
  }

  void posterior(std::span<const double> beta, std::span<const double> u, std::vector<double>& q) const {
    q.resize(items);
    for (std::size_t n = 0; n < items; ++n) {
      const auto [ll1, ll0] = class_log_likelihoods(beta, std::exp(u[n]), n);
      q[n] = sigmoid(ll1 - ll0);
    }
  }

  /// Probability, under posterior q, that model p labelled item n correctly.
  [[nodiscard]] double agreement(std::span<const double> q, std::size_t p, std::size_t n) const {
    return labels[p][n] ? q[n] : 1.0 - q[n];
  }

  /// Expected complete-data log-likelihood plus log-prior.
  [[nodiscard]] double expected(std::span<const double> q, std::span<const double> beta,
                                std::span<const double> u) const {
    double total = log_prior(beta, u);
    for (std::size_t n = 0; n < items; ++n) {
      const double scale = std::exp(u[n]);
      for (std::size_t p = 0; p < models; ++p) {
        const double z = beta[p] * scale;
        // log sigmoid(-z) = log sigmoid(z) - z
        total += log_sigmoid(z) - (1.0 - agreement(q, p, n)) * z;
      }
    }
    return total;
  }

  void gradient(std::span<const double> q, std::span<const double> beta, std::span<const double> u,
                std::vector<double>& g_beta, std::vector<double>& g_u) const {
    const double inv_var = 1.0 / (params.prior_std * params.prior_std);
    g_beta.assign(models, 0.0);
    g_u.assign(items, 0.0);
    for (std::size_t p = 0; p < models; ++p) g_beta[p] = -(beta[p] - params.prior_mean) * inv_var;
    for (std::size_t n = 0; n < items; ++n) {
      const double scale = std::exp(u[n]);
      double gu = -(u[n] - params.prior_mean) * inv_var;
      for (std::size_t p = 0; p < models; ++p) {
        const double z = beta[p] * scale;
        const double residual = agreement(q, p, n) - sigmoid(z);
        g_beta[p] += residual * scale;
        gu += residual * z;
      }
      g_u[n] = gu;
    }
  }

  /// Backtracking gradient ascent on the expected log-likelihood.
  void maximize(std::span<const double> q, std::vector<double>& beta, std::vector<double>& u) const {
    std::vector<double> g_beta, g_u, trial_beta(models), trial_u(items);
    double current = expected(q, beta, u);
    for (int step = 0; step < params.inner_steps; ++step) {
      gradient(q, beta, u, g_beta, g_u);
      double rate = params.initial_step;
      bool accepted = false;
      for (int h = 0; h <= params.max_halvings; ++h, rate *= 0.5) {
        for (std::size_t p = 0; p < models; ++p) trial_beta[p] = beta[p] + rate * g_beta[p];
        for (std::size_t n = 0; n < items; ++n) trial_u[n] = u[n] + rate * g_u[n];
        const double value = expected(q, trial_beta, trial_u);
        if (std::isfinite(value) && value >= current) {
          beta.swap(trial_beta);
          u.swap(trial_u);
          current = value;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
  }
};

}  // namespace detail

/// EM over binary labels[p][n]. Returns the best iterate; `converged` is false
/// when the round cap was hit first.
inline EmResult em_fit(std::span<const std::vector<std::uint8_t>> labels, const EmParams& params = {}) {
  if (labels.empty()) throw InputError("em_fit: no label maps");
  const std::size_t items = labels.front().size();
  if (items == 0) throw InputError("em_fit: empty label maps");
  for (const auto& l : labels) {
    if (l.size() != items) throw InputError("em_fit: label maps differ in length");
    for (const auto v : l) {
      if (v > 1) throw InputError("em_fit: labels must be binary");
    }
  }
  if (params.max_rounds < 1 || params.inner_steps < 1 || !(params.initial_step > 0.0) || !(params.prior_std > 0.0)) {
    throw ConfigError("em_fit: invalid parameters");
  }

  const detail::EmProblem problem{labels.size(), items, labels, params};
  std::vector<double> beta(labels.size(), params.prior_mean);
  std::vector<double> u(items, params.prior_mean);
  std::vector<double> q;

  EmResult result;
  double previous = problem.objective(beta, u);
  result.objective.push_back(previous);
  std::vector<double> best_beta = beta, best_u = u;
  double best = previous;

  for (int round = 1; round <= params.max_rounds; ++round) {
    problem.posterior(beta, u, q);
    problem.maximize(q, beta, u);
    const double value = problem.objective(beta, u);
    result.objective.push_back(value);
    result.rounds = round;
    if (value > best) {
      best = value;
      best_beta = beta;
      best_u = u;
    }
    if (std::abs(value - previous) < params.tolerance) {
      result.converged = true;
      break;
    }
    previous = value;
  }

  result.beta = std::move(best_beta);
  result.log_inverse_difficulty = std::move(best_u);
  result.difficulty.resize(items);
  for (std::size_t n = 0; n < items; ++n) result.difficulty[n] = std::exp(-result.log_inverse_difficulty[n]);
  problem.posterior(result.beta, result.log_inverse_difficulty, result.posterior);
  return result;
}

}  // namespace arbiter
