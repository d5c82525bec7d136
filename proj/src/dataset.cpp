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

#include "pathsynth/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "pathsynth/config.hpp"
#include "pathsynth/nifti.hpp"

namespace pathsynth {

using nlohmann::json;

LabelTable default_label_table() {
  LabelTable t;
  t[0] = TissueClass::Background;
  for (int id : {2, 7, 41, 46, 77, 251, 252, 253, 254, 255}) t[id] = TissueClass::WhiteMatter;
  for (int id : {3, 8, 42, 47}) t[id] = TissueClass::GrayMatter;
  for (int id : {4, 5, 14, 15, 24, 43, 44}) t[id] = TissueClass::Csf;
  for (int id : {10, 11, 12, 13, 16, 17, 18, 26, 28, 49, 50, 51, 52, 53, 54, 58, 60}) {
    t[id] = TissueClass::Other;
  }
  return t;
}

namespace {

[[noreturn]] void fail(const std::string& subject, const std::string& field, const std::string& what) {
  throw ManifestError("subject '" + subject + "', field '" + field + "': " + what);
}

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : root / path;
}

TargetDescriptor parse_target(const json& j, const std::string& subject, const char* field,
                              const std::filesystem::path& root, ModalityClass fallback) {
  TargetDescriptor t;
  t.modality = fallback;
  if (j.is_string()) {
    t.path = resolve(root, j.get<std::string>());
  } else if (j.is_object() && j.contains("path")) {
    t.path = resolve(root, j.at("path").get<std::string>());
    if (j.contains("modality")) {
      try {
        t.modality = modality_from_string(j.at("modality").get<std::string>());
      } catch (const std::exception& e) {
        fail(subject, field, e.what());
      }
    }
  } else {
    fail(subject, field, "expected a path string or {\"path\", \"modality\"} object");
  }
  if (!std::filesystem::exists(t.path)) fail(subject, field, "file not found: " + t.path.string());
  return t;
}

}  // namespace

Manifest parse_manifest(const json& j, const std::filesystem::path& root) {
  if (!j.is_object()) throw ManifestError("manifest must be a JSON object");
  if (!j.contains("schema_version")) throw ManifestError("manifest missing schema_version");
  Manifest m;
  m.root = root;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kManifestSchemaVersion) {
    throw ManifestError("unsupported manifest schema_version " + std::to_string(m.schema_version));
  }
  if (j.contains("datasets")) {
    for (const auto& [name, d] : j.at("datasets").items()) {
      const double w = d.is_number() ? d.get<double>() : d.value("weight", 1.0);
      if (!(w >= 0.0)) throw ManifestError("dataset '" + name + "' has a negative weight");
      m.dataset_weights[name] = w;
    }
  }
  if (j.contains("label_table")) {
    LabelTable table;
    for (const auto& [id, cls] : j.at("label_table").items()) {
      try {
        table[std::stoi(id)] = tissue_class_from_string(cls.get<std::string>());
      } catch (const std::exception& e) {
        throw ManifestError("label_table entry '" + id + "': " + e.what());
      }
    }
    m.label_table = std::move(table);
  }
  if (!j.contains("subjects") || !j.at("subjects").is_array() || j.at("subjects").empty()) {
    throw ManifestError("manifest lists no subjects");
  }
  for (const auto& s : j.at("subjects")) {
    SubjectDescriptor d;
    if (!s.contains("id")) throw ManifestError("subject entry without id");
    d.id = s.at("id").get<std::string>();
    d.dataset_tag = s.value("dataset", std::string("default"));
    for (const char* field : {"labels", "pathology"}) {
      if (!s.contains(field)) fail(d.id, field, "missing");
      const auto path = resolve(root, s.at(field).get<std::string>());
      if (!std::filesystem::exists(path)) fail(d.id, field, "file not found: " + path.string());
      (std::string(field) == "labels" ? d.labels : d.pathology) = path;
    }
    if (s.contains("gt_anat")) {
      d.gt_anat = parse_target(s.at("gt_anat"), d.id, "gt_anat", root, ModalityClass::T1wLike);
    }
    if (s.contains("gt_pathol")) {
      d.gt_pathol =
          parse_target(s.at("gt_pathol"), d.id, "gt_pathol", root, ModalityClass::T2wFlairLike);
    }
    if (!d.gt_anat && !d.gt_pathol) fail(d.id, "gt_anat/gt_pathol", "at least one target is required");
    m.subjects.push_back(std::move(d));
  }
  return m;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  const json j = read_json(path);
  try {
    return parse_manifest(j, path.parent_path());
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

LabeledSubject load_subject(const SubjectDescriptor& desc, const Manifest& manifest) {
  LabeledSubject s;
  s.id = desc.id;
  s.dataset_tag = desc.dataset_tag;
  try {
    s.labels = manifest.label_table ? read_labels(desc.labels, *manifest.label_table, false)
                                    : read_labels(desc.labels, default_label_table(), true);
  } catch (const std::exception& e) {
    fail(desc.id, "labels", e.what());
  }
  if (desc.gt_anat) {
    try {
      s.gt_anat = read_volume(desc.gt_anat->path);
    } catch (const std::exception& e) {
      fail(desc.id, "gt_anat", e.what());
    }
  }
  if (desc.gt_pathol) {
    try {
      s.gt_pathol = read_volume(desc.gt_pathol->path);
    } catch (const std::exception& e) {
      fail(desc.id, "gt_pathol", e.what());
    }
  }
  try {
    const Volume source = read_prob(desc.pathology).values();
    s.pathology = prepare_anomaly_map(
        source, s.gt_anat, desc.gt_anat ? desc.gt_anat->modality : ModalityClass::T1wLike,
        s.gt_pathol, desc.gt_pathol ? desc.gt_pathol->modality : ModalityClass::T2wFlairLike);
  } catch (const std::exception& e) {
    fail(desc.id, "pathology", e.what());
  }
  try {
    s.validate();
  } catch (const std::exception& e) {
    fail(desc.id, "grid", e.what());
  }
  return s;
}

std::string sample_dir_name(std::int64_t sample_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(sample_index));
  return buf;
}

json sample_metadata(const GenSample& sample, const SampleLocation& where,
                     const PipelineConfig& config) {
  json files = {{"image", "image.nii.gz"}, {"labels", "labels.nii.gz"},
                {"pathology", "pathology.nii.gz"}};
  if (sample.target_anat) files["target_anat"] = "target_anat.nii.gz";
  if (sample.target_pathol) files["target_pathol"] = "target_pathol.nii.gz";
  return {{"schema_version", kSampleSchemaVersion},
          {"subject_id", sample.subject_id},
          {"dataset", sample.dataset_tag},
          {"alpha", sample.alpha},
          {"beta", sample.beta},
          {"batch_index", where.batch_index},
          {"index_in_batch", where.index_in_batch},
          {"sample_index", where.sample_index},
          {"batch_seed", where.batch_seed},
          {"severity", sample.severity},
          {"seeds", to_json(sample.seeds)},
          {"deformation", to_json(sample.deformation)},
          {"pathology_draw", to_json(sample.draw)},
          {"corruption", to_json(sample.corruption)},
          {"config", to_json(config)},
          {"files", files}};
}

void write_sample(const GenSample& sample, const std::filesystem::path& dir,
                  const SampleLocation& where, const PipelineConfig& config) {
  std::filesystem::create_directories(dir);
  write_nifti(sample.image, dir / "image.nii.gz");
  write_nifti(sample.labels, dir / "labels.nii.gz", NiftiDatatype::Int32);
  write_nifti(sample.pathology.values(), dir / "pathology.nii.gz");
  if (sample.target_anat) write_nifti(*sample.target_anat, dir / "target_anat.nii.gz");
  if (sample.target_pathol) write_nifti(*sample.target_pathol, dir / "target_pathol.nii.gz");
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  out << sample_metadata(sample, where, config).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
}

GenSample regenerate_sample(const json& meta, const LabeledSubject& subject) {
  if (meta.at("schema_version").get<int>() != kSampleSchemaVersion) {
    throw ManifestError("unsupported sample schema_version");
  }
  if (meta.at("subject_id").get<std::string>() != subject.id) {
    throw ManifestError("metadata belongs to subject '" + meta.at("subject_id").get<std::string>() +
                        "', not '" + subject.id + "'");
  }
  const PipelineConfig config = pipeline_config_from_json(meta.at("config"));
  return generate_sample(subject, meta.at("severity").get<double>(),
                         seeds_from_json(meta.at("seeds")), config);
}

}  // namespace pathsynth
