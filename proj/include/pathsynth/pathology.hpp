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

/// @file pathology.hpp
/// @brief Anomaly probability maps, per-label contrast sampling and
/// direction-aware pathology enhancement.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "pathsynth/volume.hpp"

namespace pathsynth {

/// Lesions appear dark on T1w-like images and bright on T2w/FLAIR-like ones.
enum class ModalityClass { T1wLike, T2wFlairLike };

const char* to_string(ModalityClass m);
ModalityClass modality_from_string(const std::string& name);

struct Gaussian {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ContrastSpec {
  std::map<std::int32_t, Gaussian> per_label;
  std::uint64_t rng_seed = 0;
};

enum class ShiftDirection { Darken, Brighten };

const char* to_string(ShiftDirection d);

/// One intensity shift drawn for a sample. direction is Darken iff mu_w > mu_g.
struct PathologyDraw {
  double delta = 0.0;
  ShiftDirection direction = ShiftDirection::Brighten;
  double mu_w = 0.0;
  double mu_g = 0.0;
};

/// Soft anomaly map from intensities inside a lesion region. Outside the
/// region the map is 0; inside it is the min-max normalised intensity,
/// inverted for T1w-like images. A flat region (max == min) maps to 1.
ProbVolume anomaly_probability(const Volume& image, const Image<std::uint8_t>& region,
                               ModalityClass modality);

/// Per-voxel i.i.d. Gaussian intensities by label, clamped to [0,1].
/// Throws std::invalid_argument naming the first label without an entry.
Volume sample_anomaly_free(const LabelVolume& labels, const ContrastSpec& spec);

/// Mean of s0 over white-matter voxels and over gray-matter voxels.
std::pair<double, double> white_gray_means(const Volume& s0, const LabelVolume& labels);

enum class ShiftGranularity {
  PerImage,      ///< one shift for the whole lesion support
  PerComponent,  ///< one shift per 6-connected component of p > 0
};

struct EnhanceOptions {
  ShiftGranularity granularity = ShiftGranularity::PerImage;
  bool clamp = true;
};

/// Adds delta * p(x) to s0 where p > 0. delta ~ N(-mu_w/2, (mu_w/2)^2) when
/// white matter is brighter than gray matter, N(+mu_w/2, (mu_w/2)^2) otherwise.
/// With per-component shifts the returned draw records the first component's.
std::pair<Volume, PathologyDraw> enhance_pathology(const Volume& s0, const ProbVolume& p,
                                                   const LabelVolume& labels,
                                                   std::uint64_t rng_seed,
                                                   const EnhanceOptions& options = {});

/// 6-connected components of mask != 0. Background is 0; components are
/// numbered 1.. in raster order of their first voxel.
Image<std::int32_t> connected_components(const Image<std::uint8_t>& mask, std::int32_t* count);

}  // namespace pathsynth
