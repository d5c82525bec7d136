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

#include "pathsynth/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace pathsynth {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.contains(key)) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

json vec3(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace

json to_json(const DeformationConfig& c) {
  return {{"rotation_deg", c.rotation_deg},       {"scaling", c.scaling},
          {"shear", c.shear},                     {"translation_mm", c.translation_mm},
          {"nonlinear_std_mm", c.nonlinear_std_mm}, {"nonlinear_cap_mm", c.nonlinear_cap_mm},
          {"control_points", c.control_points}};
}

json to_json(const ContrastPrior& c) {
  json mean = json::object();
  json stddev = json::object();
  for (const auto& [t, r] : c.mean) mean[to_string(t)] = {r.lo, r.hi};
  for (const auto& [t, r] : c.stddev) stddev[to_string(t)] = {r.lo, r.hi};
  return {{"mean", mean}, {"stddev", stddev}};
}

json to_json(const CorruptionCaps& c) {
  return {{"slice_spacing_mm", c.slice_spacing_mm}, {"inplane_spacing_mm", c.inplane_spacing_mm},
          {"bias_strength", c.bias_strength},       {"noise_std", c.noise_std},
          {"gamma_log_std", c.gamma_log_std}};
}

json to_json(const PipelineConfig& c) {
  return {{"sample_dims", c.sample_dims},
          {"deformation", to_json(c.deformation)},
          {"contrast", to_json(c.contrast)},
          {"corruption", to_json(c.corruption)},
          {"shift_granularity",
           c.enhance.granularity == ShiftGranularity::PerImage ? "per-image" : "per-component"},
          {"share_deformation", c.share_deformation}};
}

json to_json(const GeneratorConfig& c) {
  json j = to_json(c.pipeline);
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["dataset_weights"] = c.dataset_weights;
  return j;
}

void merge_from_json(const json& j, DeformationConfig& into) {
  reject_unknown(j,
                 {"rotation_deg", "scaling", "shear", "translation_mm", "nonlinear_std_mm",
                  "nonlinear_cap_mm", "control_points"},
                 "deformation");
  take(j, "rotation_deg", into.rotation_deg);
  take(j, "scaling", into.scaling);
  take(j, "shear", into.shear);
  take(j, "translation_mm", into.translation_mm);
  take(j, "nonlinear_std_mm", into.nonlinear_std_mm);
  take(j, "nonlinear_cap_mm", into.nonlinear_cap_mm);
  take(j, "control_points", into.control_points);
  into.validate();
}

void merge_from_json(const json& j, ContrastPrior& into) {
  reject_unknown(j, {"mean", "stddev"}, "contrast");
  auto merge_ranges = [](const json& src, std::map<TissueClass, Range>& dst) {
    for (const auto& [name, pair] : src.items()) {
      const auto r = pair.get<std::array<double, 2>>();
      if (!(r[0] <= r[1])) throw std::invalid_argument("contrast range '" + name + "' has lo > hi");
      dst[tissue_class_from_string(name)] = {r[0], r[1]};
    }
  };
  if (j.contains("mean")) merge_ranges(j.at("mean"), into.mean);
  if (j.contains("stddev")) merge_ranges(j.at("stddev"), into.stddev);
}

void merge_from_json(const json& j, CorruptionCaps& into) {
  reject_unknown(j,
                 {"slice_spacing_mm", "inplane_spacing_mm", "bias_strength", "noise_std",
                  "gamma_log_std"},
                 "corruption");
  take(j, "slice_spacing_mm", into.slice_spacing_mm);
  take(j, "inplane_spacing_mm", into.inplane_spacing_mm);
  take(j, "bias_strength", into.bias_strength);
  take(j, "noise_std", into.noise_std);
  take(j, "gamma_log_std", into.gamma_log_std);
}

namespace {

const std::set<std::string> kPipelineKeys = {"sample_dims", "deformation", "contrast",
                                             "corruption", "shift_granularity",
                                             "share_deformation"};

void merge_pipeline_keys(const json& j, PipelineConfig& into) {
  take(j, "sample_dims", into.sample_dims);
  if (j.contains("deformation")) merge_from_json(j.at("deformation"), into.deformation);
  if (j.contains("contrast")) merge_from_json(j.at("contrast"), into.contrast);
  if (j.contains("corruption")) merge_from_json(j.at("corruption"), into.corruption);
  if (j.contains("shift_granularity")) {
    const auto g = j.at("shift_granularity").get<std::string>();
    if (g == "per-image") {
      into.enhance.granularity = ShiftGranularity::PerImage;
    } else if (g == "per-component") {
      into.enhance.granularity = ShiftGranularity::PerComponent;
    } else {
      throw std::invalid_argument("shift_granularity must be per-image or per-component");
    }
  }
  take(j, "share_deformation", into.share_deformation);
}

}  // namespace

void merge_from_json(const json& j, PipelineConfig& into) {
  reject_unknown(j, kPipelineKeys, "config");
  merge_pipeline_keys(j, into);
}

void merge_from_json(const json& j, GeneratorConfig& into) {
  std::set<std::string> keys = kPipelineKeys;
  keys.insert({"batch_size", "seed", "workers", "dataset_weights"});
  reject_unknown(j, keys, "config");
  merge_pipeline_keys(j, into.pipeline);
  take(j, "batch_size", into.batch_size);
  take(j, "seed", into.seed);
  take(j, "workers", into.workers);
  if (j.contains("dataset_weights")) {
    for (const auto& [name, w] : j.at("dataset_weights").items()) {
      into.dataset_weights[name] = w.get<double>();
    }
  }
  if (into.batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (into.workers <= 0) throw std::invalid_argument("workers must be positive");
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  merge_from_json(j, c);
  return c;
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  GeneratorConfig c;
  try {
    merge_from_json(json::parse(in), c);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return c;
}

json to_json(const AffineParams& p) {
  return {{"rotation_deg", vec3(p.rotation_deg)},
          {"scaling", vec3(p.scaling)},
          {"shear", vec3(p.shear)},
          {"translation_mm", vec3(p.translation_mm)}};
}

json to_json(const CorruptionSpec& s) {
  return {{"severity", s.severity},           {"target_spacing", vec3(s.target_spacing)},
          {"bias_strength", s.bias_strength}, {"noise_std", s.noise_std},
          {"gamma_log_std", s.gamma_log_std}, {"rng_seed", s.rng_seed}};
}

json to_json(const PathologyDraw& d) {
  return {{"delta", d.delta}, {"direction", to_string(d.direction)}, {"mu_w", d.mu_w}, {"mu_g", d.mu_g}};
}

json to_json(const SampleSeeds& s) {
  return {{"deform", s.deform}, {"contrast", s.contrast}, {"pathology", s.pathology},
          {"corruption", s.corruption}};
}

SampleSeeds seeds_from_json(const json& j) {
  SampleSeeds s;
  s.deform = j.at("deform").get<std::uint64_t>();
  s.contrast = j.at("contrast").get<std::uint64_t>();
  s.pathology = j.at("pathology").get<std::uint64_t>();
  s.corruption = j.at("corruption").get<std::uint64_t>();
  return s;
}

}  // namespace pathsynth
