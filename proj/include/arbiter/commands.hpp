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
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "arbiter/config.hpp"
#include "arbiter/eval.hpp"
#include "arbiter/io.hpp"
#include "arbiter/pipeline.hpp"

namespace arbiter {

namespace fs = std::filesystem;

/// One image and its candidate maps. Manifest files use the config syntax:
///   image = photo.jpg
///   map.<model> = maps/model/photo.png   (repeatable, kept in file order)
///   gt = gt/photo.png                    (optional)
///   knowledge = knowledge/photo.png      (optional)
///   config.<key> = value                 (per-run overrides)
/// Relative paths resolve against the manifest's directory.
struct RunManifest {
  fs::path image;
  std::vector<std::pair<std::string, fs::path>> maps;
  std::optional<fs::path> ground_truth;
  std::optional<fs::path> knowledge;
  std::vector<std::pair<std::string, std::string>> overrides;

  /// Every referenced file must exist.
  void validate() const {
    if (image.empty()) throw InputError("manifest: no image given");
    if (maps.empty()) throw InputError("manifest: at least one candidate map is required");
    const auto need = [](const fs::path& p) {
      if (!fs::exists(p)) throw InputError("file not found: " + p.string());
    };
    need(image);
    for (const auto& [id, path] : maps) need(path);
    if (ground_truth) need(*ground_truth);
    if (knowledge) need(*knowledge);
  }

  void apply_overrides(Settings& s) const {
    for (const auto& [k, v] : overrides) set_value(s, k, v);
  }
};

inline RunManifest parse_manifest(std::istream& in, const fs::path& base, const std::string& source) {
  RunManifest m;
  std::string line;
  int number = 0;
  const auto resolve = [&](const std::string& v) {
    const fs::path p(v);
    return p.is_absolute() ? p : base / p;
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw InputError(source + ":" + std::to_string(number) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key == "image") m.image = resolve(value);
    else if (key == "gt") m.ground_truth = resolve(value);
    else if (key == "knowledge") m.knowledge = resolve(value);
    else if (key.rfind("map.", 0) == 0 && key.size() > 4) m.maps.emplace_back(key.substr(4), resolve(value));
    else if (key.rfind("config.", 0) == 0) m.overrides.emplace_back(key.substr(7), value);
    else throw InputError(source + ":" + std::to_string(number) + ": unknown manifest key '" + key + "'");
  }
  return m;
}

inline RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path(), path.string());
}

inline ImageInputs load_inputs(const RunManifest& m, const FusionConfig& config) {
  m.validate();
  ImageInputs in;
  in.image = io::read_rgb(m.image);
  for (const auto& [id, path] : m.maps) {
    in.model_ids.push_back(id);
    in.maps.push_back(io::read_map(path));
    if (!in.maps.back().same_shape(in.image)) {
      throw InputError("size mismatch: " + path.string() + " does not match " + m.image.string());
    }
  }
  if (m.knowledge) {
    in.knowledge_map = io::read_map(*m.knowledge);
    if (!in.knowledge_map->same_shape(in.image)) {
      throw InputError("size mismatch: " + m.knowledge->string() + " does not match " + m.image.string());
    }
  } else if (config.knowledge == KnowledgeSource::file) {
    throw InputError("knowledge source is 'file' but the manifest names no knowledge map");
  }
  return in;
}

// ---------------------------------------------------------------------------
// CSV helpers

inline std::string expertise_csv(const std::vector<std::string>& models, const std::vector<ExpertiseVector>& history) {
  std::string out = "generation,model,alpha,beta\n";
  for (std::size_t t = 0; t < history.size(); ++t) {
    const auto& ev = history[t];
    for (std::size_t p = 0; p < models.size(); ++p) {
      out += std::to_string(t) + "," + models[p] + "," + format_fixed(ev.alpha[p]) + "," + format_fixed(ev.beta[p]) +
             "\n";
    }
  }
  return out;
}

inline std::string difficulty_csv(const std::vector<ExpertiseVector>& history) {
  std::string out = "generation,superpixel,difficulty,posterior\n";
  for (std::size_t t = 0; t < history.size(); ++t) {
    const auto& ev = history[t];
    for (std::size_t n = 0; n < ev.difficulty.size(); ++n) {
      out += std::to_string(t) + "," + std::to_string(n) + "," + format_fixed(ev.difficulty[n]) + "," +
             format_fixed(ev.posterior[n]) + "\n";
    }
  }
  return out;
}

inline std::string trace_csv(const std::vector<double>& trace) {
  std::string out = "generation,mean_abs_delta\n";
  for (std::size_t t = 0; t < trace.size(); ++t) out += std::to_string(t + 1) + "," + format_fixed(trace[t]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// fuse / trace

struct FuseOptions {
  fs::path out_dir = ".";
  bool dump_generations = false;
};

struct FuseOutcome {
  std::vector<fs::path> written;
  FusionResult fusion;
};

inline FuseOutcome cmd_fuse(const RunManifest& manifest, Settings settings, const FuseOptions& options) {
  manifest.apply_overrides(settings);
  const FusionConfig& config = settings.fusion;
  config.validate();
  const ImageInputs inputs = load_inputs(manifest, config);
  const PreparedImage prepared = prepare_image(inputs, config);
  ImageFusion fused = fuse_prepared(prepared, config);

  // Encode everything before the first write.
  const std::string stem = manifest.image.stem().string();
  std::vector<std::pair<fs::path, std::vector<std::uint8_t>>> files;
  files.emplace_back(options.out_dir / (stem + "_final.png"), io::encode_png(fused.final_map));
  const auto text = [](const std::string& s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
  files.emplace_back(options.out_dir / (stem + "_expertise.csv"),
                     text(expertise_csv(inputs.model_ids, fused.fusion.expertise)));
  if (config.mode == ExpertiseMode::latent) {
    files.emplace_back(options.out_dir / (stem + "_difficulty.csv"), text(difficulty_csv(fused.fusion.expertise)));
  }
  if (options.dump_generations) {
    for (std::size_t t = 0; t < fused.fusion.references.size(); ++t) {
      files.emplace_back(options.out_dir / (stem + "_reference_" + std::to_string(t) + ".png"),
                         io::encode_png(unpool(fused.fusion.references[t], prepared.grid)));
    }
  }
  FuseOutcome outcome;
  for (const auto& [path, bytes] : files) {
    io::write_bytes(path, bytes);
    outcome.written.push_back(path);
  }
  outcome.fusion = std::move(fused.fusion);
  return outcome;
}

struct TraceOutcome {
  fs::path csv;
  ConvergenceSummary summary;
};

inline TraceOutcome cmd_trace(const RunManifest& manifest, Settings settings, const fs::path& out_dir) {
  manifest.apply_overrides(settings);
  const FusionConfig& config = settings.fusion;
  config.validate();
  const ImageInputs inputs = load_inputs(manifest, config);
  const PreparedImage prepared = prepare_image(inputs, config);
  const FusionResult fusion = run_fusion(prepared.stack, prepared.knowledge, config);
  TraceOutcome out;
  out.summary = convergence_trace(fusion.trace);
  out.csv = out_dir / (manifest.image.stem().string() + "_trace.csv");
  io::write_text(out.csv, trace_csv(fusion.trace));
  return out;
}

// ---------------------------------------------------------------------------
// evaluate

/// Dataset layout:
///   images/<id>.(png|jpg|jpeg)
///   maps/<model>/<id>.png
///   gt/<id>.png              (optional)
///   knowledge/<id>.png       (optional; required for knowledge = file)
struct Dataset {
  fs::path root;
  std::vector<std::string> models;  // sorted
  std::vector<std::string> ids;     // sorted, complete image sets only
  std::map<std::string, fs::path> images;
  bool has_ground_truth = false;
  std::vector<std::string> incomplete;

  [[nodiscard]] fs::path map_path(const std::string& model, const std::string& id) const {
    return root / "maps" / model / (id + ".png");
  }
  [[nodiscard]] fs::path gt_path(const std::string& id) const { return root / "gt" / (id + ".png"); }
  [[nodiscard]] fs::path knowledge_path(const std::string& id) const { return root / "knowledge" / (id + ".png"); }
};

inline Dataset scan_dataset(const fs::path& root) {
  Dataset d;
  d.root = root;
  if (!fs::is_directory(root / "images")) throw InputError("dataset: missing directory " + (root / "images").string());
  if (!fs::is_directory(root / "maps")) throw InputError("dataset: missing directory " + (root / "maps").string());
  for (const auto& e : fs::directory_iterator(root / "maps")) {
    if (e.is_directory()) d.models.push_back(e.path().filename().string());
  }
  std::sort(d.models.begin(), d.models.end());
  if (d.models.empty()) throw InputError("dataset: no model directories under maps/");
  for (const auto& e : fs::directory_iterator(root / "images")) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    const std::string id = e.path().stem().string();
    if (!d.images.emplace(id, e.path()).second) throw InputError("dataset: duplicate image id '" + id + "'");
  }
  for (const auto& [id, path] : d.images) {
    const bool complete = std::all_of(d.models.begin(), d.models.end(),
                                      [&](const std::string& m) { return fs::exists(d.map_path(m, id)); });
    (complete ? d.ids : d.incomplete).push_back(id);
  }
  d.has_ground_truth = fs::is_directory(root / "gt");
  if (d.ids.empty()) throw InputError("dataset: no image has a map from every model");
  return d;
}

struct EvaluateOptions {
  fs::path out_dir = "out";
  /// am-stats, am-latent, ave, candidates (every raw map), or a model name.
  std::vector<std::string> methods = {"am-stats", "am-latent", "ave", "candidates"};
  bool write_maps = true;
};

struct EvaluateOutcome {
  std::optional<EvalReport> report;
  std::optional<fs::path> csv;
  std::vector<std::string> warnings;
  std::size_t images = 0;
};

namespace detail {

struct MethodPlan {
  std::string name;
  enum class Kind { am_stats, am_latent, ave, candidate } kind;
  std::size_t model = 0;
};

inline std::vector<MethodPlan> plan_methods(const std::vector<std::string>& requested,
                                            const std::vector<std::string>& models) {
  std::vector<MethodPlan> plan;
  for (const auto& m : requested) {
    if (m == "am-stats") plan.push_back({m, MethodPlan::Kind::am_stats});
    else if (m == "am-latent") plan.push_back({m, MethodPlan::Kind::am_latent});
    else if (m == "ave") plan.push_back({m, MethodPlan::Kind::ave});
    else if (m == "candidates") {
      for (std::size_t p = 0; p < models.size(); ++p) plan.push_back({models[p], MethodPlan::Kind::candidate, p});
    } else {
      const auto it = std::find(models.begin(), models.end(), m);
      if (it == models.end()) throw ConfigError("unknown method '" + m + "'");
      plan.push_back({m, MethodPlan::Kind::candidate, static_cast<std::size_t>(it - models.begin())});
    }
  }
  if (plan.empty()) throw ConfigError("no methods requested");
  return plan;
}

struct ImageWork {
  std::vector<MapRaster> outputs;  // one per method
  std::optional<MapRaster> ground_truth;
  std::vector<std::string> warnings;
};

}  // namespace detail

/// Runs `fn(i)` for i in [0, count) on up to `jobs` threads; rethrows the
/// failure of the lowest index.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn fn) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline EvaluateOutcome cmd_evaluate(const fs::path& root, const Settings& settings, const EvaluateOptions& options) {
  settings.fusion.validate();
  const Dataset data = scan_dataset(root);
  const auto plan = detail::plan_methods(options.methods, data.models);
  EvaluateOutcome outcome;
  for (const auto& id : data.incomplete) outcome.warnings.push_back("skipping '" + id + "': missing candidate maps");
  if (!data.has_ground_truth) outcome.warnings.push_back("no gt/ directory: fusion only, metrics omitted");

  std::vector<detail::ImageWork> work(data.ids.size());
  parallel_for(data.ids.size(), settings.jobs, [&](std::size_t i) {
    const std::string& id = data.ids[i];
    RunManifest m;
    m.image = data.images.at(id);
    for (const auto& model : data.models) m.maps.emplace_back(model, data.map_path(model, id));
    if (fs::exists(data.knowledge_path(id))) m.knowledge = data.knowledge_path(id);
    const ImageInputs inputs = load_inputs(m, settings.fusion);
    const PreparedImage prepared = prepare_image(inputs, settings.fusion);

    auto& w = work[i];
    if (data.has_ground_truth) {
      if (!fs::exists(data.gt_path(id))) throw InputError("missing ground truth " + data.gt_path(id).string());
      w.ground_truth = io::read_mask(data.gt_path(id));
      if (!w.ground_truth->same_shape(inputs.image)) throw InputError("size mismatch: " + data.gt_path(id).string());
    }
    for (const auto& method : plan) {
      switch (method.kind) {
        case detail::MethodPlan::Kind::am_stats:
        case detail::MethodPlan::Kind::am_latent: {
          FusionConfig cfg = settings.fusion;
          cfg.mode = method.kind == detail::MethodPlan::Kind::am_stats ? ExpertiseMode::stats : ExpertiseMode::latent;
          ImageFusion f = fuse_prepared(prepared, cfg);
          for (const auto& warning : f.fusion.warnings) w.warnings.push_back(id + " " + method.name + ": " + warning);
          w.outputs.push_back(std::move(f.final_map));
          break;
        }
        case detail::MethodPlan::Kind::ave:
          w.outputs.push_back(unpool(average_baseline(prepared.stack), prepared.grid));
          break;
        case detail::MethodPlan::Kind::candidate:
          w.outputs.push_back(inputs.maps[method.model]);
          break;
      }
    }
  });

  std::vector<ImageScore> rows;
  std::vector<std::string> skipped;
  for (std::size_t i = 0; i < data.ids.size(); ++i) {
    auto& w = work[i];
    outcome.warnings.insert(outcome.warnings.end(), w.warnings.begin(), w.warnings.end());
    if (!w.ground_truth) continue;
    bool empty_truth = false;
    std::vector<ImageScore> image_rows;
    for (std::size_t k = 0; k < plan.size(); ++k) {
      const auto f = f_measure(w.outputs[k], *w.ground_truth);
      if (!f) {
        empty_truth = true;
        break;
      }
      image_rows.push_back({data.ids[i], plan[k].name, *f, mae(w.outputs[k], *w.ground_truth)});
    }
    if (empty_truth) {
      skipped.push_back(data.ids[i]);
      outcome.warnings.push_back("skipping '" + data.ids[i] + "' in metrics: ground truth has no foreground");
      continue;
    }
    rows.insert(rows.end(), image_rows.begin(), image_rows.end());
  }

  if (options.write_maps) {
    for (std::size_t i = 0; i < data.ids.size(); ++i) {
      for (std::size_t k = 0; k < plan.size(); ++k) {
        if (plan[k].kind == detail::MethodPlan::Kind::candidate) continue;
        io::write_map_png(options.out_dir / "maps" / plan[k].name / (data.ids[i] + ".png"), work[i].outputs[k]);
      }
    }
  }
  outcome.images = data.ids.size();
  if (data.has_ground_truth) {
    if (rows.empty()) throw InputError("no image could be scored (all ground truths empty)");
    outcome.report = make_report(std::move(rows), std::move(skipped));
    outcome.csv = options.out_dir / "report.csv";
    io::write_text(*outcome.csv, to_csv(*outcome.report));
  }
  return outcome;
}

}  // namespace arbiter
