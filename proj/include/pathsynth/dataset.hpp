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

/// @file dataset.hpp
/// @brief Subject manifests and the on-disk layout of generated samples.
///
/// Manifest (JSON, schema_version 1):
/// @code
/// {
///   "schema_version": 1,
///   "datasets": {"adni3": {"weight": 1.0}},          // optional
///   "label_table": {"0": "background", "2": "white-matter"},  // optional
///   "subjects": [
///     {"id": "sub-01", "dataset": "adni3",
///      "labels": "sub-01/aseg.nii.gz", "pathology": "sub-01/lesion.nii.gz",
///      "gt_anat": {"path": "sub-01/t1.nii.gz", "modality": "t1w"},
///      "gt_pathol": {"path": "sub-01/flair.nii.gz", "modality": "flair"}}
///   ]
/// }
/// @endcode
/// Relative paths resolve against the manifest directory. Without a
/// label_table the FreeSurfer aseg convention is used and unlisted labels
/// map to "other".
///
/// Sample layout: <out>/<subject>/<sample_idx>/{image, labels, pathology,
/// target_anat?, target_pathol?}.nii.gz plus meta.json.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathsynth/pathology.hpp"
#include "pathsynth/pipeline.hpp"

namespace pathsynth {

constexpr int kManifestSchemaVersion = 1;
constexpr int kSampleSchemaVersion = 1;

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TargetDescriptor {
  std::filesystem::path path;
  ModalityClass modality = ModalityClass::T1wLike;
};

struct SubjectDescriptor {
  std::string id;
  std::string dataset_tag;
  std::filesystem::path labels;
  std::filesystem::path pathology;
  std::optional<TargetDescriptor> gt_anat;
  std::optional<TargetDescriptor> gt_pathol;

  int alpha() const { return gt_anat ? 1 : 0; }
  int beta() const { return gt_pathol ? 1 : 0; }
};

struct Manifest {
  int schema_version = kManifestSchemaVersion;
  std::filesystem::path root;
  std::map<std::string, double> dataset_weights;
  std::optional<LabelTable> label_table;
  std::vector<SubjectDescriptor> subjects;
};

/// FreeSurfer aseg IDs mapped to the five tissue classes.
LabelTable default_label_table();

/// Validates schema and that every referenced file exists; errors name the
/// subject and the field.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& root);

/// Reads volumes and builds the anomaly map.
LabeledSubject load_subject(const SubjectDescriptor& desc, const Manifest& manifest);

struct SampleLocation {
  std::int64_t batch_index = 0;
  std::int64_t index_in_batch = 0;
  std::int64_t sample_index = 0;  ///< global per-run index, names the directory
  std::uint64_t batch_seed = 0;
};

std::string sample_dir_name(std::int64_t sample_index);

/// Everything needed to regenerate the sample from its source subject.
nlohmann::json sample_metadata(const GenSample& sample, const SampleLocation& where,
                               const PipelineConfig& config);

/// Writes volumes and meta.json into `dir` (created if needed).
void write_sample(const GenSample& sample, const std::filesystem::path& dir,
                  const SampleLocation& where, const PipelineConfig& config);

/// Regenerates a sample from its meta.json record and the source subject.
GenSample regenerate_sample(const nlohmann::json& meta, const LabeledSubject& subject);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace pathsynth
