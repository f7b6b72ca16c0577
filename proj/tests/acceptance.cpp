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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "arbiter/commands.hpp"
#include "arbiter/synthetic_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace arbiter;

namespace {

using U8 = std::vector<std::uint8_t>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome expertise_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> items(1, 32), models(1, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto thresholds = default_alpha_thresholds();
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = items(rng), p = models(rng);
    std::bernoulli_distribution coin(u(rng));
    std::vector<double> ref(static_cast<std::size_t>(n));
    for (double& r : ref) r = u(rng);
    std::vector<U8> labels(static_cast<std::size_t>(p), U8(static_cast<std::size_t>(n)));
    for (auto& l : labels) {
      for (auto& v : l) v = coin(rng) ? 1 : 0;
    }
    const auto beta = stats_beta(labels, ref, 0.1, 1e-6);
    const auto alpha = stats_alpha(labels, ref, thresholds, 1e-6);
    for (int q = 0; q < p; ++q) {
      const double b = oracle::likelihood_ratio(labels[q], ref, 0.1, 1e-6);
      const double a = oracle::mean_ratio(labels[q], ref, thresholds, 1e-6);
      worst = std::max(worst, std::abs(beta[q] - b) / std::max(1.0, std::abs(b)));
      worst = std::max(worst, std::abs(alpha[q] - a) / std::max(1.0, std::abs(a)));
    }
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf, "200 instances, max relative error %.3g (tol 1e-12), %.3f s (limit 5 s)", worst, elapsed);
  return {worst <= 1e-12 && elapsed < 5.0, buf};
}

Outcome graph_oracle() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> target(2, 50);
  int mismatches = 0;
  int max_n = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto grid = testing::random_grid(rng, target(rng));
    max_n = std::max(max_n, grid.count);
    const auto graph = build_affinity(grid);
    double sum = 0.0;
    for (const auto& [a, b] : grid.edges) sum += lab_distance(grid.mean_lab[a], grid.mean_lab[b]);
    const double a = grid.edges.empty() ? 0.0 : sum / static_cast<double>(grid.edges.size());
    std::vector<oracle::Edge> edges;
    for (const auto& [x, y] : grid.edges) {
      edges.push_back({x, y, std::max(lab_distance(grid.mean_lab[x], grid.mean_lab[y]) - a, 0.0)});
    }
    // Each pair is compared with the path sum taken from its lower index;
    // the reverse summation order can differ in the last ulp.
    for (int n = 0; n < grid.count; ++n) {
      const auto d = oracle::bellman_ford(grid.count, edges, n);
      for (int m = n; m < grid.count; ++m) {
        if (graph.distance(n, m) != d[static_cast<std::size_t>(m)]) ++mismatches;
        if (graph.distance(m, n) != graph.distance(n, m)) ++mismatches;
      }
    }
  }
  int otsu_mismatches = 0;
  std::uniform_int_distribution<int> len(1, 400);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    const bool coarse = trial % 3 == 0;
    for (double& x : v) x = coarse ? std::round(u(rng) * 6.0) / 6.0 : u(rng);
    if (otsu(v) != oracle::otsu(v)) ++otsu_mismatches;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "geodesic mismatches %d over 50 grids (N <= %d); otsu mismatches %d of 100", mismatches,
                max_n, otsu_mismatches);
  return {mismatches == 0 && otsu_mismatches == 0 && max_n <= 50, buf};
}

Outcome em_recovery() {
  const auto start = Clock::now();
  const std::vector<double> accuracy{0.95, 0.85, 0.75, 0.65, 0.55};
  double min_rho = 1.0, mean_rho = 0.0, min_agree = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    std::bernoulli_distribution coin(0.5);
    U8 truth(500);
    for (auto& t : truth) t = coin(rng) ? 1 : 0;
    std::vector<U8> labels;
    for (const double a : accuracy) {
      std::bernoulli_distribution correct(a);
      U8 l(truth.size());
      for (std::size_t n = 0; n < l.size(); ++n) l[n] = correct(rng) ? truth[n] : 1 - truth[n];
      labels.push_back(std::move(l));
    }
    const auto r = em_fit(labels);
    const double rho = oracle::spearman(r.beta, accuracy);
    min_rho = std::min(min_rho, rho);
    mean_rho += rho / 20.0;
    std::size_t agree = 0;
    for (std::size_t n = 0; n < truth.size(); ++n) agree += (r.posterior[n] >= 0.5) == (truth[n] == 1) ? 1 : 0;
    min_agree = std::min(min_agree, static_cast<double>(agree) / static_cast<double>(truth.size()));
  }
  const double elapsed = seconds_since(start);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "20 seeds: min Spearman %.3f, mean %.3f (>= 0.9 every seed); min posterior agreement %.3f (>= 0.9); "
                "%.2f s (limit 30 s)",
                min_rho, mean_rho, min_agree, elapsed);
  return {min_rho >= 0.9 && min_agree >= 0.9 && elapsed < 30.0, buf};
}

struct SceneRun {
  synthetic::Scene scene;
  PreparedImage prepared;
};

SceneRun prepare_scene(synthetic::Scene scene, const FusionConfig& config) {
  const ImageInputs in{scene.image, scene.model_ids, scene.candidates, {}};
  PreparedImage prepared = prepare_image(in, config);
  return {std::move(scene), std::move(prepared)};
}

Outcome convergence() {
  double worst[2] = {0.0, 0.0};
  int failures = 0;
  const ExpertiseMode modes[2] = {ExpertiseMode::stats, ExpertiseMode::latent};
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    FusionConfig config;
    const auto run = prepare_scene(synthetic::noisy_scene(100 + seed), config);
    for (int k = 0; k < 2; ++k) {
      config.mode = modes[k];
      const auto r = run_fusion(run.prepared.stack, run.prepared.knowledge, config);
      const double last = r.trace.back();
      worst[k] = std::max(worst[k], last);
      if (!convergence_trace(r.trace).converged) ++failures;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "30 images, max |S_Ref^5 - S_Ref^4|: stats %.2e, latent %.2e (limit 0.01); %d failures",
                worst[0], worst[1], failures);
  return {failures == 0, buf};
}

Outcome rectification() {
  double f_ave = 0.0, f_stats = 0.0, f_latent = 0.0;
  constexpr int kImages = 30;
  for (std::uint64_t seed = 1; seed <= kImages; ++seed) {
    FusionConfig config;
    const auto run = prepare_scene(synthetic::corrupted_scene(200 + seed), config);
    const auto& truth = run.scene.truth;
    f_ave += *f_measure(unpool(average_baseline(run.prepared.stack), run.prepared.grid), truth) / kImages;
    config.mode = ExpertiseMode::stats;
    f_stats += *f_measure(fuse_prepared(run.prepared, config).final_map, truth) / kImages;
    config.mode = ExpertiseMode::latent;
    f_latent += *f_measure(fuse_prepared(run.prepared, config).final_map, truth) / kImages;
  }
  const double best = std::max(f_stats, f_latent);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "mean F over %d corrupted images: AVE %.4f, AM-stats %.4f (%+.4f), AM-latent %.4f (%+.4f); "
                "best margin %+.4f (>= 0.05)",
                kImages, f_ave, f_stats, f_stats - f_ave, f_latent, f_latent - f_ave, best - f_ave);
  return {best - f_ave >= 0.05, buf};
}

Outcome degenerate_identities() {
  FusionConfig config;
  const auto run = prepare_scene(synthetic::noisy_scene(301), config);
  config.generations = 0;
  const auto t0 = run_fusion(run.prepared.stack, run.prepared.knowledge, config);
  const bool ave_exact = t0.final_map == average_baseline(run.prepared.stack);

  config.generations = 1;
  config.mode = ExpertiseMode::fixed;
  config.fixed_log_weight = 0.0;
  const auto t1 = run_fusion(run.prepared.stack, run.prepared.knowledge, config);
  double worst = 0.0;
  const auto& ref = run.prepared.knowledge.reference;
  for (const auto& m : t1.final_state.stack.maps) {
    for (std::size_t n = 0; n < ref.size(); ++n) {
      worst = std::max(worst, std::abs(m[n] - std::clamp(ref[n], config.logit_clamp, 1.0 - config.logit_clamp)));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "T=0 equals AVE bit-exactly: %s; zero log-weights at T=1 max error %.2e (tol 1e-12)",
                ave_exact ? "yes" : "no", worst);
  return {ave_exact && worst <= 1e-12, buf};
}

Outcome metric_identities() {
  std::mt19937_64 rng(1007);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double p = u(rng);
    worst = std::max(worst, std::abs(f_measure_from(p, p) - p));
  }
  MapRaster gt(32, 24);
  std::bernoulli_distribution coin(0.3);
  for (double& v : gt.data) v = coin(rng) ? 1.0 : 0.0;
  const double self_mae = mae(gt, gt);
  const double example = f_measure_from(0.8, 0.5, 0.3);
  char buf[160];
  std::snprintf(buf, sizeof buf, "F(p,p)=p max error %.2e; mae(gt,gt)=%g; F(0.8,0.5)=%.4f (0.7027 +/- 1e-4)", worst,
                self_mae, example);
  return {worst <= 1e-12 && self_mae == 0.0 && std::abs(example - 0.7027) <= 1e-4, buf};
}

Outcome performance(const fs::path& scratch) {
  const synthetic::SceneParams size{400, 300};
  synthetic::Rng rng(1008);
  synthetic::Scene scene = synthetic::make_base(rng, size, 0.1, 0.9, 0.1, 0.9, true);
  for (int k = 0; k < 6; ++k) {
    scene.model_ids.push_back("m" + std::to_string(k));
    scene.candidates.push_back(synthetic::render_candidate(
        rng, scene, {.hi = 0.9 - 0.05 * k, .lo = 0.1 + 0.04 * k, .sigma = 0.05 + 0.02 * k, .shift_x = k - 3}));
  }
  const fs::path root = scratch / "perf";
  synthetic::write_scene(root, "big", scene);
  RunManifest m;
  m.image = root / "images" / "big.png";
  for (const auto& id : scene.model_ids) m.maps.emplace_back(id, root / "maps" / id / "big.png");
  Settings s;
  s.fusion.mode = ExpertiseMode::stats;
  s.jobs = 1;
  const auto start = Clock::now();
  const auto out = cmd_fuse(m, s, {root, false});
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf, "400x300, P=6, N=400 (realized %zu), stats mode, end to end %.2f s (limit 5 s)",
                out.fusion.final_map.size(), elapsed);
  return {elapsed <= 5.0, buf};
}

Outcome determinism(const fs::path& scratch) {
  const fs::path data = scratch / "suite";
  for (int i = 0; i < 6; ++i) {
    const std::string id = "img" + std::to_string(i);
    synthetic::write_scene(data, id, i % 2 ? synthetic::corrupted_scene(400 + i) : synthetic::noisy_scene(400 + i));
  }
  // Mixed candidate counts would make the dataset incomplete; keep the noisy four.
  for (int i = 1; i < 6; i += 2) {
    fs::remove(data / "images" / ("img" + std::to_string(i) + ".png"));
  }
  Settings s;
  s.fusion.seed = 7;
  EvaluateOptions o;
  o.out_dir = scratch / "eval1";
  cmd_evaluate(data, s, o);
  o.out_dir = scratch / "eval2";
  s.jobs = 2;
  cmd_evaluate(data, s, o);

  const auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(scratch / "eval1")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = scratch / "eval2" / fs::relative(e.path(), scratch / "eval1");
    if (!fs::exists(other) || read(e.path()) != read(other)) ++differing;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu files (report.csv + fused PNGs) compared across two runs, %zu differ", files,
                differing);
  return {files > 1 && differing == 0 && fs::exists(scratch / "eval1" / "report.csv"), buf};
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "arbiter_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 oracle equivalence: expertise", expertise_oracle},
      {"2 oracle equivalence: graph and otsu", graph_oracle},
      {"3 EM recovery", em_recovery},
      {"4 convergence", convergence},
      {"5 rectification", rectification},
      {"6 degenerate-configuration identities", degenerate_identities},
      {"7 metric identities", metric_identities},
      {"8 performance budget", [&] { return performance(scratch); }},
      {"9 end-to-end determinism", [&] { return determinism(scratch); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  fs::remove_all(scratch);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
