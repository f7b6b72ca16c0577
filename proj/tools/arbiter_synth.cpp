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

// Writes a procedural dataset in the `arbiter evaluate` layout.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "arbiter/synthetic_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic saliency-fusion dataset"};
  std::string out;
  int count = 10;
  std::uint64_t seed = 1;
  std::string kind = "noisy";
  app.add_option("out", out, "output directory")->required();
  app.add_option("--count", count, "number of images");
  app.add_option("--seed", seed, "first scene seed");
  app.add_option("--kind", kind, "noisy (4 graded candidates) or corrupted (2 of 3 share a false region)")
      ->check(CLI::IsMember({"noisy", "corrupted"}));
  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const auto scene = kind == "noisy" ? arbiter::synthetic::noisy_scene(s) : arbiter::synthetic::corrupted_scene(s);
    char id[32];
    std::snprintf(id, sizeof id, "img%03d", i);
    arbiter::synthetic::write_scene(out, id, scene);
  }
  std::cout << "wrote " << count << " images to " << out << "\n";
  return 0;
}
