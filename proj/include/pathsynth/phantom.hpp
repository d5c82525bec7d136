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

/// @file phantom.hpp
/// @brief Nested-ellipsoid brain phantom with a white-matter lesion, used by
/// the tests and the demo manifest writer.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pathsynth/pipeline.hpp"

namespace pathsynth {

struct PhantomOptions {
  Dims dims{64, 64, 64};
  Vec3 spacing{1.0, 1.0, 1.0};
  bool with_anat = true;
  bool with_pathol = true;
  std::string id = "phantom";
  std::string dataset = "phantom";
};

struct Phantom {
  LabeledSubject subject;
  Volume lesion_mask;  ///< binary 0/1
};

/// Labels follow the FreeSurfer aseg IDs (0, 2/41 WM, 3/42 GM, 4/24 CSF, 10 other).
Phantom make_phantom(const PhantomOptions& options = {});

/// Writes phantom volumes plus a one-subject manifest.json into `dir`.
/// Returns the manifest path.
std::filesystem::path write_phantom_dataset(const std::filesystem::path& dir,
                                            const PhantomOptions& options = {});

}  // namespace pathsynth
