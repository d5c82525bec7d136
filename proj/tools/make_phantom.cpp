// Copyright 2026 The pathsynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes a one-subject demo dataset (phantom volumes + manifest.json).

#include <iostream>

#include <CLI11.hpp>

#include "pathsynth/phantom.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a phantom subject and manifest for trying out pathsynth"};
  std::string out;
  std::int64_t size = 64;
  pathsynth::PhantomOptions options;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--size", size, "Cube edge in voxels")->capture_default_str();
  app.add_option("--id", options.id, "Subject id")->capture_default_str();
  app.add_option("--dataset", options.dataset, "Dataset tag")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (size < 8) {
    std::cerr << "make_phantom: --size must be >= 8\n";
    return 1;
  }
  options.dims = {size, size, size};
  try {
    std::cout << pathsynth::write_phantom_dataset(out, options).string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "make_phantom: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
