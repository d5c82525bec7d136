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

/// @file objectives.hpp
/// @brief Training objectives as pure kernels: dual-target synthesis loss
/// with gradient term, segmentation loss, implicit pathology loss through
/// frozen reference segmenters, and the scheduled total objective.
///
/// All accumulations are double precision in a fixed order, so repeated
/// evaluations are bit-identical.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pathsynth/volume.hpp"

namespace pathsynth {

/// Forward differences along x, y, z. The last slice on each axis has zero
/// gradient.
std::array<Volume, 3> spatial_gradient(const Volume& v);

/// Network outputs for one sample of a batch.
struct SynthPrediction {
  Volume anat;
  Volume pathol;
};

/// Non-owning view of one sample's (deformed) targets. Null when missing.
struct TargetView {
  const Volume* anat = nullptr;
  const Volume* pathol = nullptr;
};

enum class Reduction {
  Mean,  ///< per-voxel means inside each term
  Sum,   ///< raw sums
};

struct SynthesisOptions {
  double lambda = 1.0;
  Reduction reduction = Reduction::Mean;
};

struct SynthesisTerms {
  double anat_l1 = 0.0;
  double anat_grad = 0.0;  ///< already scaled by lambda
  double pathol_l1 = 0.0;
  double pathol_grad = 0.0;

  double sum() const { return anat_l1 + anat_grad + pathol_l1 + pathol_grad; }
};

struct SynthesisLoss {
  double anat = 0.0;    ///< alpha * sum_i (l1 + lambda * grad) for anatomy
  double pathol = 0.0;  ///< beta * sum_i (...) for pathology
  double total = 0.0;
  std::vector<SynthesisTerms> per_sample;
};

/// Mean (or sum) |a - b| over voxels.
double l1_term(const Volume& a, const Volume& b, Reduction reduction);
/// Mean (or sum) over voxels and the three axes of |grad a - grad b|.
double gradient_term(const Volume& a, const Volume& b, Reduction reduction);

/// Terms of an inactive modality (flag 0) are never evaluated and contribute
/// exactly 0. Throws on grid mismatch or an active flag without a target.
SynthesisLoss synthesis_loss(std::span<const SynthPrediction> preds,
                             std::span<const TargetView> targets, int alpha, int beta,
                             const SynthesisOptions& options = {});

struct SegLossOptions {
  double dice_weight = 0.5;
  double bce_weight = 0.5;
  double epsilon = 1e-6;
  double prob_clamp = 1e-7;
};

struct SegLoss {
  double soft_dice = 0.0;
  double bce = 0.0;
  double total = 0.0;
};

/// Blend of soft Dice loss 1 - (2 sum pq + eps)/(sum p + sum q + eps) and
/// binary cross-entropy of prediction `pred` against reference `ref`.
SegLoss seg_loss(const ProbVolume& pred, const ProbVolume& ref, const SegLossOptions& options = {});

/// Frozen pathology estimator. Implementations must be deterministic and
/// return values in [0,1].
class ReferenceSegmenter {
 public:
  virtual ~ReferenceSegmenter() = default;
  virtual ProbVolume segment(const Volume& image) const = 0;
};

/// Flags voxels deviating from the brain median by more than k * MAD, then
/// smooths the indicator and restricts it to the brain (image > threshold).
class ThresholdSegmenter final : public ReferenceSegmenter {
 public:
  struct Options {
    double k = 3.0;
    double smoothing_sigma = 1.0;
    double brain_threshold = 1e-3;
  };

  ThresholdSegmenter() = default;
  explicit ThresholdSegmenter(Options options) : options_(options) {}
  ProbVolume segment(const Volume& image) const override;

 private:
  Options options_;
};

/// Reads intensities clamped to [0,1] as probabilities. Trivial to mirror in
/// other implementations, so it serves as the parity segmenter.
class IntensitySegmenter final : public ReferenceSegmenter {
 public:
  ProbVolume segment(const Volume& image) const override;
};

struct PathologyLoss {
  double seg_anat = 0.0;    ///< alpha * sum_i seg_loss(anat)
  double seg_pathol = 0.0;  ///< beta * sum_i seg_loss(pathol)
  double total = 0.0;
  std::vector<std::array<double, 2>> per_sample;  ///< {anat, pathol}
};

/// Reference maps of targets are computed once per distinct target volume.
PathologyLoss implicit_pathology_loss(std::span<const SynthPrediction> preds,
                                      std::span<const TargetView> targets,
                                      const ReferenceSegmenter& seg_anat,
                                      const ReferenceSegmenter& seg_pathol, int alpha, int beta,
                                      const SegLossOptions& options = {});

/// lambda weights the gradient term; omega switches at `omega_switch_iteration`.
struct LossWeights {
  double lambda = 1.0;
  double omega_early = 0.1;
  double omega_late = 1.0;
  std::int64_t omega_switch_iteration = 100000;

  double omega(std::int64_t iteration) const {
    return iteration < omega_switch_iteration ? omega_early : omega_late;
  }
};

double total_loss(double l_synth, double l_pathol, const LossWeights& weights,
                  std::int64_t iteration);

struct LossReport {
  std::int64_t iteration = 0;
  double omega = 0.0;
  double l_anat = 0.0;
  double l_pathol = 0.0;
  double l_synth = 0.0;
  double l_seg_anat = 0.0;
  double l_seg_pathol = 0.0;
  double l_pathol_total = 0.0;
  double total = 0.0;
  std::vector<SynthesisTerms> synth_per_sample;
  std::vector<std::array<double, 2>> seg_per_sample;
};

LossReport evaluate_losses(std::span<const SynthPrediction> preds,
                           std::span<const TargetView> targets, const ReferenceSegmenter& seg_anat,
                           const ReferenceSegmenter& seg_pathol, int alpha, int beta,
                           const LossWeights& weights, std::int64_t iteration,
                           Reduction reduction = Reduction::Mean);

/// One JSON object on a single line, no trailing newline.
std::string to_json_line(const LossReport& report);

}  // namespace pathsynth
