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

/// @file pipeline.hpp
/// @brief Per-subject sample generation (deform, encode pathology, corrupt),
/// mild-to-severe intra-subject batches, and weighted co-training streams.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathsynth/corruption.hpp"
#include "pathsynth/deformation.hpp"
#include "pathsynth/pathology.hpp"
#include "pathsynth/volume.hpp"

namespace pathsynth {

/// Raised by the generator with the failing stage prefixed to the message.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "': " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct LabeledSubject {
  std::string id;
  std::string dataset_tag;
  LabelVolume labels;
  ProbVolume pathology;            ///< soft anomaly map P on the label grid
  std::optional<Volume> gt_anat;   ///< MP-RAGE-like target
  std::optional<Volume> gt_pathol; ///< FLAIR-like target

  int alpha() const { return gt_anat ? 1 : 0; }
  int beta() const { return gt_pathol ? 1 : 0; }
  /// Checks shared grid and that at least one target is present.
  void validate() const;
};

/// Turns a pathology source into an anomaly map. Binary masks go through
/// anomaly_probability using the FLAIR-like target when present, else the
/// T1w-like target; non-binary inputs in [0,1] are taken as already soft.
ProbVolume prepare_anomaly_map(const Volume& pathology_source,
                               const std::optional<Volume>& gt_anat, ModalityClass anat_modality,
                               const std::optional<Volume>& gt_pathol,
                               ModalityClass pathol_modality);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-tissue ranges for per-label Gaussian means and stddevs.
struct ContrastPrior {
  std::map<TissueClass, Range> mean;
  std::map<TissueClass, Range> stddev;

  static ContrastPrior defaults();
};

/// Draws (mean, stddev) independently for every label in the table.
ContrastSpec draw_contrast_spec(const LabelTable& table, const ContrastPrior& prior,
                                std::uint64_t seed);

struct PipelineConfig {
  Dims sample_dims{128, 128, 128};  ///< zeros mean "use the subject grid"
  DeformationConfig deformation;
  ContrastPrior contrast = ContrastPrior::defaults();
  CorruptionCaps corruption;
  EnhanceOptions enhance;
  bool share_deformation = false;  ///< one field per batch instead of per sample
};

struct SampleSeeds {
  std::uint64_t deform = 0;
  std::uint64_t contrast = 0;
  std::uint64_t pathology = 0;
  std::uint64_t corruption = 0;

  static SampleSeeds from_master(std::uint64_t master_seed);
  friend bool operator==(const SampleSeeds&, const SampleSeeds&) = default;
};

struct GenSample {
  std::string subject_id;
  std::string dataset_tag;
  int alpha = 0;
  int beta = 0;
  double severity = 0.0;
  SampleSeeds seeds;
  Volume image;                    ///< corrupted S_i in [0,1]
  LabelVolume labels;              ///< deformed L
  ProbVolume pathology;            ///< deformed P
  std::optional<Volume> target_anat;
  std::optional<Volume> target_pathol;
  AffineParams deformation;
  ContrastSpec contrast;
  PathologyDraw draw;
  CorruptionSpec corruption;
  // Filled only when requested.
  std::optional<Volume> anomaly_free;  ///< S_0
  std::optional<Volume> enhanced;      ///< S before corruption
};

struct GenerateOptions {
  bool keep_intermediates = false;
};

GenSample generate_sample(const LabeledSubject& subject, double severity,
                          const SampleSeeds& seeds, const PipelineConfig& config,
                          const GenerateOptions& options = {});
GenSample generate_sample(const LabeledSubject& subject, double severity,
                          std::uint64_t master_seed, const PipelineConfig& config,
                          const GenerateOptions& options = {});

struct BatchPlanEntry {
  double severity = 0.0;
  SampleSeeds seeds;
};

/// Stratified ascending severities: sample i lands uniformly in
/// [i/n, (i+1)/n), i.e. centre (i+0.5)/n jittered by +-1/(2n).
std::vector<double> mild_to_severe(std::int64_t n, std::uint64_t master_seed);

/// Severity and seeds for each sample of a batch, without generating it.
std::vector<BatchPlanEntry> plan_batch(std::int64_t n, std::uint64_t master_seed,
                                       bool share_deformation);

struct Batch {
  std::string subject_id;
  std::uint64_t master_seed = 0;
  std::vector<GenSample> samples;
};

Batch generate_batch(const LabeledSubject& subject, std::int64_t n, std::uint64_t master_seed,
                     const PipelineConfig& config);

/// Dataset-weighted subject schedule. Each step picks a dataset from the
/// categorical over weights, then a subject uniformly within it.
class CotrainingSchedule {
 public:
  struct Step {
    std::uint64_t index = 0;
    std::size_t subject = 0;
    std::uint64_t batch_seed = 0;
  };

  /// Datasets absent from `weights` get weight 1.
  CotrainingSchedule(const std::vector<std::string>& dataset_tags,
                     const std::map<std::string, double>& weights, std::uint64_t master_seed);

  Step next();
  const std::vector<std::string>& datasets() const { return datasets_; }

 private:
  std::vector<std::string> datasets_;
  std::vector<double> cumulative_;
  std::vector<std::vector<std::size_t>> members_;
  std::uint64_t master_seed_;
  std::uint64_t step_ = 0;
};

/// Stream of batches over in-memory subjects.
class CotrainingIterator {
 public:
  CotrainingIterator(std::vector<std::shared_ptr<const LabeledSubject>> subjects,
                     const std::map<std::string, double>& weights, std::uint64_t master_seed,
                     PipelineConfig config, std::int64_t batch_size = 4);

  Batch next();

 private:
  static std::vector<std::string> tags_of(
      const std::vector<std::shared_ptr<const LabeledSubject>>& subjects);

  std::vector<std::shared_ptr<const LabeledSubject>> subjects_;
  CotrainingSchedule schedule_;
  PipelineConfig config_;
  std::int64_t batch_size_;
};

}  // namespace pathsynth
