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

/// @file config.hpp
/// @brief Generator configuration and its JSON form.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "pathsynth/pipeline.hpp"

namespace pathsynth {

struct GeneratorConfig {
  PipelineConfig pipeline;
  std::int64_t batch_size = 4;
  std::uint64_t seed = 0;
  int workers = 1;
  std::map<std::string, double> dataset_weights;
};

nlohmann::json to_json(const DeformationConfig& c);
nlohmann::json to_json(const ContrastPrior& c);
nlohmann::json to_json(const CorruptionCaps& c);
nlohmann::json to_json(const PipelineConfig& c);
nlohmann::json to_json(const GeneratorConfig& c);

/// Keys missing from `j` keep the values already in `into`; unknown keys throw.
void merge_from_json(const nlohmann::json& j, DeformationConfig& into);
void merge_from_json(const nlohmann::json& j, ContrastPrior& into);
void merge_from_json(const nlohmann::json& j, CorruptionCaps& into);
void merge_from_json(const nlohmann::json& j, PipelineConfig& into);
void merge_from_json(const nlohmann::json& j, GeneratorConfig& into);

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
GeneratorConfig load_generator_config(const std::filesystem::path& path);

nlohmann::json to_json(const AffineParams& p);
nlohmann::json to_json(const CorruptionSpec& s);
nlohmann::json to_json(const PathologyDraw& d);
nlohmann::json to_json(const SampleSeeds& s);
SampleSeeds seeds_from_json(const nlohmann::json& j);

}  // namespace pathsynth
