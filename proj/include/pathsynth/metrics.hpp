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

/// @file metrics.hpp
/// @brief Image quality and overlap metrics on intensity-normalised volumes.

#pragma once

#include "pathsynth/volume.hpp"

namespace pathsynth {

double metric_l1(const Volume& a, const Volume& b);
double metric_mse(const Volume& a, const Volume& b);

/// 10 log10(max^2 / mse). Returns +infinity when mse == 0.
double psnr_from_mse(double mse, double max_value = 1.0);
double metric_psnr(const Volume& a, const Volume& b, double max_value = 1.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean local SSIM with a separable Gaussian window, population statistics,
/// evaluated only where the full window fits inside the volume. Every axis
/// must be at least `window` voxels long.
double metric_ssim(const Volume& a, const Volume& b, const SsimOptions& options = {});

/// 2|A n B| / (|A| + |B|) with A = {a >= threshold}, B = {b >= threshold}.
/// Two empty masks score 1.
double metric_dice(const Volume& a, const Volume& b, double threshold = 0.5);

}  // namespace pathsynth
