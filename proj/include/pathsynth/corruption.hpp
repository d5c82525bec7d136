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

/// @file corruption.hpp
/// @brief Acquisition corruption: slice-spacing blur and resampling, smooth
/// multiplicative bias, additive Gaussian noise and a gamma transform.

#pragma once

#include <cstdint>

#include "pathsynth/volume.hpp"

namespace pathsynth {

/// Upper bounds at severity 1. Every realised magnitude is scaled by severity.
struct CorruptionCaps {
  double slice_spacing_mm = 8.0;     ///< thickest simulated slice spacing
  double inplane_spacing_mm = 3.0;   ///< coarsest simulated in-plane spacing
  double bias_strength = 0.5;        ///< stddev of the log bias lattice
  double noise_std = 0.1;
  double gamma_log_std = 0.4;
};

/// Fully realised corruption parameters for one sample.
struct CorruptionSpec {
  double severity = 0.0;
  Vec3 target_spacing{0.0, 0.0, 0.0};  ///< simulated acquisition spacing; 0 = native
  double bias_strength = 0.0;
  double noise_std = 0.0;
  double gamma_log_std = 0.0;
  std::uint64_t rng_seed = 0;

  /// Draws each magnitude uniformly in [0, cap * severity]. One random axis
  /// receives the slice-spacing cap, the other two the in-plane cap.
  static CorruptionSpec draw(double severity, const Vec3& native_spacing,
                             const CorruptionCaps& caps, std::uint64_t rng_seed);

  bool is_identity() const;
  void validate() const;
};

/// Anti-aliasing blur width in voxels: 0.85 * (target/native - 1) / 2, floored at 0.
Vec3 blur_sigma_for_spacing(const Vec3& target_spacing, const Vec3& native_spacing);

/// Separable Gaussian blur, kernel radius ceil(3 sigma), edge-replicated.
Volume gaussian_blur(const Volume& v, const Vec3& sigma_vox);

/// Runs blur -> down/up resample -> bias -> noise -> gamma -> clamp.
/// severity 0 returns the input unchanged.
Volume corrupt(const Volume& s, const CorruptionSpec& spec);

/// Smooth multiplicative field with unit mean over voxels where `s > 0`
/// (whole volume when that set is empty). Exposed for tests.
Volume bias_field(const Volume& s, double strength, std::uint64_t seed);

}  // namespace pathsynth
