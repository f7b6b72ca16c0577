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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arbiter/color.hpp"
#include "arbiter/fusion.hpp"
#include "arbiter/knowledge.hpp"
#include "arbiter/superpixel.hpp"

namespace arbiter {

/// Decoded inputs for one image.
struct ImageInputs {
  RgbImage image;
  std::vector<std::string> model_ids;
  std::vector<MapRaster> maps;
  std::optional<MapRaster> knowledge_map;
};

/// Everything shared by the fusion runs of one image.
struct PreparedImage {
  SuperpixelGrid grid;
  CandidateStack stack;
  AffinityGraph graph;
  KnowledgeBundle knowledge;
};

inline PreparedImage prepare_image(const ImageInputs& in, const FusionConfig& config) {
  config.validate();
  if (in.maps.empty()) throw InputError("at least one candidate map is required");
  for (std::size_t p = 0; p < in.maps.size(); ++p) {
    if (!in.maps[p].same_shape(in.image)) {
      const std::string id = p < in.model_ids.size() ? in.model_ids[p] : std::to_string(p);
      throw InputError("candidate map '" + id + "' does not match the image size");
    }
  }
  if (config.knowledge == KnowledgeSource::file) {
    if (!in.knowledge_map) throw InputError("knowledge source is 'file' but no knowledge map was given");
    if (!in.knowledge_map->same_shape(in.image)) throw InputError("knowledge map does not match the image size");
  }

  PreparedImage out;
  const LabImage lab = to_lab(in.image);
  const long long pixels = static_cast<long long>(in.image.width) * in.image.height;
  SlicParams slic{static_cast<int>(std::min<long long>(config.superpixels, pixels)), config.compactness,
                  config.slic_iterations};
  out.grid = slic_segment(lab, slic);

  std::vector<SuperpixelVector> pooled;
  pooled.reserve(in.maps.size());
  for (const auto& m : in.maps) pooled.push_back(pool(m, out.grid));
  out.stack = CandidateStack::from_maps(std::move(pooled));

  SuperpixelVector external = config.knowledge == KnowledgeSource::file
                                  ? external_knowledge(*in.knowledge_map, out.grid)
                                  : boundary_knowledge(out.grid, config.clusters, config.seed);
  out.graph = build_affinity(out.grid, config.theta);
  out.knowledge = build_reference(out.stack.labels, std::move(external), config.knowledge, out.graph,
                                  config.propagation_iterations);
  return out;
}

struct ImageFusion {
  FusionResult fusion;
  MapRaster final_map;  // pixel level
};

inline ImageFusion fuse_prepared(const PreparedImage& prepared, const FusionConfig& config) {
  ImageFusion out;
  out.fusion = run_fusion(prepared.stack, prepared.knowledge, config);
  out.final_map = unpool(out.fusion.final_map, prepared.grid);
  return out;
}

}  // namespace arbiter
