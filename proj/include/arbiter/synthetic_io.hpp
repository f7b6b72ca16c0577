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

#include <filesystem>
#include <string>

#include "arbiter/io.hpp"
#include "arbiter/synthetic.hpp"

namespace arbiter::synthetic {

/// Writes a scene in the evaluate layout under `root`.
inline void write_scene(const std::filesystem::path& root, const std::string& id, const Scene& s) {
  io::write_rgb_png(root / "images" / (id + ".png"), s.image);
  io::write_map_png(root / "gt" / (id + ".png"), s.truth);
  for (std::size_t k = 0; k < s.candidates.size(); ++k) {
    io::write_map_png(root / "maps" / s.model_ids[k] / (id + ".png"), s.candidates[k]);
  }
}

}  // namespace arbiter::synthetic
