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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "arbiter/fusion.hpp"
#include "gtest/gtest.h"

namespace arbiter {
namespace {

CandidateStack random_stack(std::mt19937_64& rng, std::size_t models, std::size_t items) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SuperpixelVector> maps(models, SuperpixelVector(items));
  for (auto& m : maps) {
    for (double& v : m) v = u(rng);
  }
  return CandidateStack::from_maps(std::move(maps));
}

KnowledgeBundle reference_only(SuperpixelVector ref) {
  KnowledgeBundle k;
  k.reference = std::move(ref);
  return k;
}

TEST(CaUpdate, SingleSuperpixelExample) {
  const auto stack = CandidateStack::from_maps({{0.8}, {0.6}});
  ASSERT_EQ(stack.labels[1][0], 1);
  const LogWeights w{{1.0, 0.0}, {0.0, 0.3}};
  const auto next = ca_update(stack, std::vector<double>{0.5}, w, 1e-4);
  EXPECT_NEAR(next[0][0], 0.7503, 1e-4);
  EXPECT_DOUBLE_EQ(next[0][0], sigmoid(1.1));
}

TEST(CaUpdate, ClampedPrior) {
  EXPECT_NEAR(clamped_logit(1.0, 1e-4), 9.21, 1e-2);
  EXPECT_NEAR(clamped_logit(1.0, 1e-4), std::log((1 - 1e-4) / 1e-4), 1e-12);
  EXPECT_NEAR(clamped_logit(0.0, 1e-4), -clamped_logit(1.0, 1e-4), 1e-12);
}

TEST(CaUpdate, ZeroWeightsAtHalfGiveHalf) {
  std::mt19937_64 rng(1);
  const auto stack = random_stack(rng, 3, 12);
  const LogWeights zero{std::vector<double>(3, 0.0), std::vector<double>(3, 0.0)};
  for (const auto& m : ca_update(stack, std::vector<double>(12, 0.5), zero, 1e-4)) {
    for (const double v : m) EXPECT_EQ(v, 0.5);
  }
}

TEST(CaUpdate, IndependentOfModelAndSuperpixelOrder) {
  std::mt19937_64 rng(2);
  const auto stack = random_stack(rng, 4, 30);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  LogWeights w{std::vector<double>(4), std::vector<double>(4)};
  for (double& x : w.intensity) x = u(rng);
  for (double& x : w.binary) x = u(rng);
  SuperpixelVector ref(30);
  for (double& r : ref) r = std::abs(u(rng)) / 3.0;
  const auto base = ca_update(stack, ref, w, 1e-4);

  const std::vector<std::size_t> model_order{2, 3, 0, 1};
  std::vector<std::size_t> item_order(30);
  std::iota(item_order.begin(), item_order.end(), 0);
  std::shuffle(item_order.begin(), item_order.end(), rng);

  CandidateStack permuted;
  LogWeights pw;
  SuperpixelVector pref;
  for (const auto n : item_order) pref.push_back(ref[n]);
  for (const auto p : model_order) {
    SuperpixelVector m, unused;
    std::vector<std::uint8_t> l;
    for (const auto n : item_order) {
      m.push_back(stack.maps[p][n]);
      l.push_back(stack.labels[p][n]);
    }
    permuted.maps.push_back(m);
    permuted.labels.push_back(l);
    permuted.thresholds.push_back(stack.thresholds[p]);
    pw.intensity.push_back(w.intensity[p]);
    pw.binary.push_back(w.binary[p]);
  }
  const auto out = ca_update(permuted, pref, pw, 1e-4);
  for (std::size_t k = 0; k < model_order.size(); ++k) {
    for (std::size_t i = 0; i < item_order.size(); ++i) {
      // Same summation order over q is not guaranteed, so allow rounding.
      EXPECT_NEAR(out[k][i], base[model_order[k]][item_order[i]], 1e-14);
    }
  }
}

TEST(CaStep, StatesStayInsideOpenInterval) {
  std::mt19937_64 rng(3);
  FusionConfig config;
  auto state = initial_state(random_stack(rng, 3, 50), SuperpixelVector(50, 0.0), config);
  state.reference[7] = 1.0;
  for (int t = 0; t < 4; ++t) {
    state = ca_step(state);
    EXPECT_EQ(state.generation, t + 1);
    for (const auto& m : state.stack.maps) {
      for (const double v : m) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
      }
    }
    for (std::size_t p = 0; p < state.stack.models(); ++p) {
      EXPECT_EQ(state.stack.labels[p], binarize(state.stack.maps[p], state.stack.thresholds[p]));
    }
    EXPECT_EQ(state.reference, update_reference(state.stack));
  }
}

TEST(UpdateReference, MeanOfMaps) {
  const auto same = CandidateStack::from_maps({{0.1, 0.9}, {0.1, 0.9}});
  EXPECT_EQ(update_reference(same), (SuperpixelVector{0.1, 0.9}));
  const auto two = CandidateStack::from_maps({{0.2, 0.0}, {0.6, 1.0}});
  EXPECT_NEAR(update_reference(two)[0], 0.4, 1e-15);
}

TEST(AverageBaseline, ComplementaryMapsCancel) {
  const auto stack = CandidateStack::from_maps({{0.2, 0.7, 1.0}, {0.8, 0.3, 0.0}});
  for (const double v : average_baseline(stack)) EXPECT_EQ(v, 0.0);
  const auto single = CandidateStack::from_maps({{0.2, 0.6, 0.4}});
  EXPECT_EQ(average_baseline(single), min_max_normalize(single.maps[0]));
}

TEST(RunFusion, ZeroGenerationsIsAverage) {
  std::mt19937_64 rng(4);
  const auto stack = random_stack(rng, 4, 40);
  FusionConfig config;
  config.generations = 0;
  const auto r = run_fusion(stack, reference_only(SuperpixelVector(40, 0.3)), config);
  EXPECT_EQ(r.final_map, average_baseline(stack));
  EXPECT_TRUE(r.trace.empty());
}

TEST(RunFusion, ZeroLogWeightsReproduceClampedReference) {
  std::mt19937_64 rng(5);
  const auto stack = random_stack(rng, 3, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SuperpixelVector ref(40);
  for (double& r : ref) r = u(rng);
  ref[0] = 0.0;
  ref[1] = 1.0;
  FusionConfig config;
  config.generations = 1;
  config.mode = ExpertiseMode::fixed;
  config.fixed_log_weight = 0.0;
  const auto r = run_fusion(stack, reference_only(ref), config);
  for (const auto& m : r.final_state.stack.maps) {
    for (std::size_t n = 0; n < ref.size(); ++n) EXPECT_NEAR(m[n], std::clamp(ref[n], 1e-4, 1 - 1e-4), 1e-12);
  }
}

TEST(RunFusion, UnanimousMaskKeepsItsShape) {
  const SuperpixelVector mask{1, 1, 0, 0, 1, 0, 0, 0, 1, 0};
  const auto stack = CandidateStack::from_maps({mask, mask, mask});
  for (const auto mode : {ExpertiseMode::stats, ExpertiseMode::latent}) {
    FusionConfig config;
    config.mode = mode;
    const auto r = run_fusion(stack, reference_only(mask), config);
    for (std::size_t p = 0; p < 3; ++p) {
      EXPECT_EQ(r.final_state.stack.labels[p], binarize(mask, 0.5)) << to_string(mode);
    }
  }
}

TEST(RunFusion, TraceAndHistoryShapes) {
  std::mt19937_64 rng(6);
  const auto stack = random_stack(rng, 3, 60);
  FusionConfig config;
  const auto r = run_fusion(stack, reference_only(stack.maps[0]), config);
  EXPECT_EQ(r.trace.size(), 5u);
  EXPECT_EQ(r.references.size(), 6u);
  EXPECT_EQ(r.expertise.size(), 5u);
  for (const double t : r.trace) EXPECT_GE(t, 0.0);
  for (std::size_t t = 0; t < r.trace.size(); ++t) {
    EXPECT_EQ(r.trace[t], mean_abs_difference(r.references[t + 1], r.references[t]));
  }
  const auto again = run_fusion(stack, reference_only(stack.maps[0]), config);
  EXPECT_EQ(again.final_map, r.final_map);
}

TEST(FusionConfig, Validation) {
  FusionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.logit_clamp = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.generations = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.theta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CandidateStack, RejectsBadMaps) {
  EXPECT_THROW(CandidateStack::from_maps({}), InputError);
  EXPECT_THROW(CandidateStack::from_maps({{0.1, 0.2}, {0.3}}), InputError);
  EXPECT_THROW(CandidateStack::from_maps({{1.5}}), InputError);
}

}  // namespace
}  // namespace arbiter
