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

// Command-line front end: fuse, trace, evaluate, defaults.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arbiter/commands.hpp"

namespace fs = std::filesystem;
using namespace arbiter;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> mode;
  std::optional<std::string> knowledge;
  std::optional<int> generations;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out_dir = ".";
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key = value configuration file");
  app->add_option("--mode", f.mode, "expertise estimator")->check(CLI::IsMember({"stats", "latent", "fixed"}));
  app->add_option("--knowledge", f.knowledge, "external knowledge source")->check(CLI::IsMember({"boundary", "file"}));
  app->add_option("--generations", f.generations, "cellular automaton generations");
  app->add_option("--seed", f.seed, "k-means seed");
  app->add_option("--jobs", f.jobs, "worker threads (0: one per CPU)");
  app->add_option("--out-dir", f.out_dir, "output directory");
}

Settings resolve(const CommonFlags& f) {
  Settings s;
  if (!f.config.empty()) apply_config_file(s, f.config);
  apply_environment(s);
  if (f.mode) set_value(s, "mode", *f.mode);
  if (f.knowledge) set_value(s, "knowledge", *f.knowledge);
  if (f.generations) s.fusion.generations = *f.generations;
  if (f.seed) s.fusion.seed = *f.seed;
  if (f.jobs) s.jobs = *f.jobs;
  s.fusion.validate();
  return s;
}

struct InputFlags {
  std::string manifest;
  std::string image;
  std::vector<std::string> maps;
  std::string gt;
  std::string knowledge_map;
};

void add_inputs(CLI::App* app, InputFlags& f) {
  app->add_option("--manifest", f.manifest, "run manifest file");
  app->add_option("--image", f.image, "input image");
  app->add_option("--map", f.maps, "candidate map as model=path (repeatable)");
  app->add_option("--gt", f.gt, "ground-truth mask");
  app->add_option("--knowledge-map", f.knowledge_map, "external knowledge map");
}

RunManifest manifest_from(const InputFlags& f) {
  RunManifest m;
  if (!f.manifest.empty()) m = load_manifest(f.manifest);
  if (!f.image.empty()) m.image = f.image;
  for (const auto& spec : f.maps) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--map expects model=path, got '" + spec + "'");
    m.maps.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
  }
  if (!f.gt.empty()) m.ground_truth = fs::path(f.gt);
  if (!f.knowledge_map.empty()) m.knowledge = fs::path(f.knowledge_map);
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency map fusion with a reference-guided cellular automaton"};
  app.require_subcommand(1);

  CommonFlags fuse_flags, trace_flags, eval_flags, defaults_flags;
  InputFlags fuse_inputs, trace_inputs;
  bool dump_generations = false;
  std::string dataset;
  std::string methods = "am-stats,am-latent,ave,candidates";

  auto* fuse = app.add_subcommand("fuse", "fuse the candidate maps of one image");
  add_common(fuse, fuse_flags);
  add_inputs(fuse, fuse_inputs);
  fuse->add_flag("--dump-generations", dump_generations, "write the reference map of every generation");

  auto* trace = app.add_subcommand("trace", "write the per-generation convergence series of one image");
  add_common(trace, trace_flags);
  add_inputs(trace, trace_inputs);

  auto* evaluate = app.add_subcommand("evaluate", "fuse and score a dataset directory");
  add_common(evaluate, eval_flags);
  evaluate->add_option("dataset", dataset, "dataset root (images/, maps/<model>/, gt/, knowledge/)")->required();
  evaluate->add_option("--methods", methods, "comma-separated: am-stats, am-latent, ave, candidates, <model>");

  auto* defaults = app.add_subcommand("defaults", "print the effective configuration");
  defaults->add_option("--config", defaults_flags.config, "key = value configuration file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fuse) {
      const Settings s = resolve(fuse_flags);
      const auto out = cmd_fuse(manifest_from(fuse_inputs), s, {fuse_flags.out_dir, dump_generations});
      for (const auto& w : out.fusion.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& p : out.written) std::cout << p.string() << "\n";
    } else if (*trace) {
      const Settings s = resolve(trace_flags);
      const auto out = cmd_trace(manifest_from(trace_inputs), s, trace_flags.out_dir);
      std::cout << trace_csv(out.summary.series);
      std::cerr << (out.summary.converged ? "converged" : "not converged") << "; wrote " << out.csv.string() << "\n";
    } else if (*evaluate) {
      const Settings s = resolve(eval_flags);
      EvaluateOptions opts;
      opts.out_dir = eval_flags.out_dir;
      opts.methods.clear();
      std::stringstream list(methods);
      for (std::string m; std::getline(list, m, ',');) {
        if (!m.empty()) opts.methods.push_back(m);
      }
      const auto out = cmd_evaluate(dataset, s, opts);
      for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
      if (out.report) {
        for (const auto& m : out.report->aggregates) {
          std::cout << m.method << "\tF=" << format_fixed(m.mean_f_measure) << "\tMAE=" << format_fixed(m.mean_mae)
                    << "\n";
        }
        std::cerr << "wrote " << out.csv->string() << "\n";
      }
    } else if (*defaults) {
      Settings s;
      if (!defaults_flags.config.empty()) apply_config_file(s, defaults_flags.config);
      apply_environment(s);
      s.fusion.validate();
      std::cout << dump_settings(s);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
