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

#include "pathsynth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pathsynth/random.hpp"

namespace pathsynth {

void LabeledSubject::validate() const {
  if (!gt_anat && !gt_pathol) {
    throw std::invalid_argument("subject '" + id + "' has neither anatomy nor pathology target");
  }
  const Grid& g = labels.grid();
  auto same = [&](const Grid& other) {
    return other.dims == g.dims && other.spacing == g.spacing;
  };
  if (!same(pathology.grid())) {
    throw std::invalid_argument("subject '" + id + "': pathology grid differs from labels");
  }
  if (gt_anat && !same(gt_anat->grid())) {
    throw std::invalid_argument("subject '" + id + "': gt_anat grid differs from labels");
  }
  if (gt_pathol && !same(gt_pathol->grid())) {
    throw std::invalid_argument("subject '" + id + "': gt_pathol grid differs from labels");
  }
}

ProbVolume prepare_anomaly_map(const Volume& pathology_source,
                               const std::optional<Volume>& gt_anat, ModalityClass anat_modality,
                               const std::optional<Volume>& gt_pathol,
                               ModalityClass pathol_modality) {
  bool binary = true;
  for (float x : pathology_source.data()) {
    if (x != 0.0f && x != 1.0f) {
      binary = false;
      break;
    }
  }
  if (!binary) return ProbVolume(pathology_source);

  Image<std::uint8_t> region(pathology_source.grid(), 0);
  for (std::int64_t n = 0; n < region.size(); ++n) region[n] = pathology_source[n] != 0.0f ? 1 : 0;
  if (gt_pathol) return anomaly_probability(*gt_pathol, region, pathol_modality);
  if (gt_anat) return anomaly_probability(*gt_anat, region, anat_modality);
  return ProbVolume(pathology_source);
}

ContrastPrior ContrastPrior::defaults() {
  ContrastPrior p;
  p.mean[TissueClass::Background] = {0.0, 0.0};
  p.stddev[TissueClass::Background] = {0.0, 0.0};
  for (TissueClass t : {TissueClass::WhiteMatter, TissueClass::GrayMatter, TissueClass::Csf,
                        TissueClass::Other}) {
    p.mean[t] = {0.05, 0.95};
    p.stddev[t] = {0.01, 0.06};
  }
  return p;
}

ContrastSpec draw_contrast_spec(const LabelTable& table, const ContrastPrior& prior,
                                std::uint64_t seed) {
  Rng rng(seed);
  ContrastSpec spec;
  spec.rng_seed = mix64(seed, Stage::Contrast, 1);
  for (const auto& [id, tissue] : table) {
    const auto m = prior.mean.find(tissue);
    const auto s = prior.stddev.find(tissue);
    if (m == prior.mean.end() || s == prior.stddev.end()) {
      throw std::invalid_argument(std::string("contrast prior has no range for tissue ") +
                                  to_string(tissue));
    }
    Gaussian g;
    g.mean = rng.uniform(m->second.lo, m->second.hi);
    g.stddev = rng.uniform(s->second.lo, s->second.hi);
    spec.per_label[id] = g;
  }
  return spec;
}

SampleSeeds SampleSeeds::from_master(std::uint64_t master_seed) {
  return {mix64(master_seed, Stage::Deformation), mix64(master_seed, Stage::Contrast),
          mix64(master_seed, Stage::Pathology), mix64(master_seed, Stage::Corruption)};
}

GenSample generate_sample(const LabeledSubject& subject, double severity,
                          const SampleSeeds& seeds, const PipelineConfig& config,
                          const GenerateOptions& options) {
  try {
    subject.validate();
  } catch (const std::exception& e) {
    throw PipelineError("subject", e.what());
  }
  if (!(severity >= 0.0 && severity <= 1.0)) {
    throw PipelineError("subject", "severity must be in [0,1]");
  }

  GenSample out;
  out.subject_id = subject.id;
  out.dataset_tag = subject.dataset_tag;
  out.alpha = subject.alpha();
  out.beta = subject.beta();
  out.severity = severity;
  out.seeds = seeds;

  const Grid& grid = subject.labels.grid();
  try {
    Dims out_dims = config.sample_dims;
    if (out_dims[0] <= 0 || out_dims[1] <= 0 || out_dims[2] <= 0) out_dims = grid.dims;
    const DeformationField field =
        sample_deformation(grid.dims, grid.spacing, config.deformation, seeds.deform, out_dims);
    out.deformation = field.affine();
    out.labels = warp_labels(subject.labels, field);
    out.pathology = warp_volume(subject.pathology, field);
    if (subject.gt_anat) out.target_anat = warp_volume(*subject.gt_anat, field);
    if (subject.gt_pathol) out.target_pathol = warp_volume(*subject.gt_pathol, field);
  } catch (const std::exception& e) {
    throw PipelineError("deformation", e.what());
  }

  Volume s0;
  try {
    out.contrast = draw_contrast_spec(subject.labels.table(), config.contrast, seeds.contrast);
    s0 = sample_anomaly_free(out.labels, out.contrast);
  } catch (const std::exception& e) {
    throw PipelineError("contrast", e.what());
  }

  Volume enhanced;
  try {
    auto [s, draw] = enhance_pathology(s0, out.pathology, out.labels, seeds.pathology,
                                       config.enhance);
    enhanced = std::move(s);
    out.draw = draw;
  } catch (const std::exception& e) {
    throw PipelineError("pathology", e.what());
  }

  try {
    out.corruption = CorruptionSpec::draw(severity, grid.spacing, config.corruption, seeds.corruption);
    out.image = corrupt(enhanced, out.corruption);
    require_finite(out.image, "image");
  } catch (const std::exception& e) {
    throw PipelineError("corruption", e.what());
  }

  if (options.keep_intermediates) {
    out.anomaly_free = std::move(s0);
    out.enhanced = std::move(enhanced);
  }
  return out;
}

GenSample generate_sample(const LabeledSubject& subject, double severity,
                          std::uint64_t master_seed, const PipelineConfig& config,
                          const GenerateOptions& options) {
  return generate_sample(subject, severity, SampleSeeds::from_master(master_seed), config, options);
}

std::vector<double> mild_to_severe(std::int64_t n, std::uint64_t master_seed) {
  if (n <= 0) throw std::invalid_argument("batch size must be positive");
  std::vector<double> s(static_cast<std::size_t>(n));
  const double width = 1.0 / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng(mix64(master_seed, Stage::Severity, static_cast<std::uint64_t>(i)));
    const double centre = (static_cast<double>(i) + 0.5) * width;
    s[i] = std::clamp(centre + rng.uniform(-0.5 * width, 0.5 * width), 0.0, 1.0);
  }
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<BatchPlanEntry> plan_batch(std::int64_t n, std::uint64_t master_seed,
                                       bool share_deformation) {
  const auto severities = mild_to_severe(n, master_seed);
  std::vector<BatchPlanEntry> plan(severities.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    plan[i].severity = severities[i];
    plan[i].seeds = SampleSeeds::from_master(mix64(master_seed, Stage::Sample, i));
    if (share_deformation) plan[i].seeds.deform = mix64(master_seed, Stage::Deformation, 0);
  }
  return plan;
}

Batch generate_batch(const LabeledSubject& subject, std::int64_t n, std::uint64_t master_seed,
                     const PipelineConfig& config) {
  Batch batch;
  batch.subject_id = subject.id;
  batch.master_seed = master_seed;
  for (const auto& entry : plan_batch(n, master_seed, config.share_deformation)) {
    batch.samples.push_back(generate_sample(subject, entry.severity, entry.seeds, config));
  }
  return batch;
}

CotrainingSchedule::CotrainingSchedule(const std::vector<std::string>& dataset_tags,
                                       const std::map<std::string, double>& weights,
                                       std::uint64_t master_seed)
    : master_seed_(master_seed) {
  if (dataset_tags.empty()) throw std::invalid_argument("co-training needs at least one subject");
  const std::set<std::string> unique(dataset_tags.begin(), dataset_tags.end());
  for (const auto& [name, w] : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("dataset weight for '" + name + "' must be finite and >= 0");
    }
  }
  double total = 0.0;
  for (const auto& tag : unique) {
    const auto it = weights.find(tag);
    const double w = it == weights.end() ? 1.0 : it->second;
    if (w <= 0.0) continue;
    datasets_.push_back(tag);
    total += w;
    cumulative_.push_back(total);
    members_.emplace_back();
    for (std::size_t s = 0; s < dataset_tags.size(); ++s) {
      if (dataset_tags[s] == tag) members_.back().push_back(s);
    }
  }
  if (datasets_.empty()) throw std::invalid_argument("all dataset weights are zero");
}

CotrainingSchedule::Step CotrainingSchedule::next() {
  Step s;
  s.index = step_++;
  Rng rng(mix64(master_seed_, Stage::Iterator, s.index));
  const double u = rng.uniform() * cumulative_.back();
  std::size_t d = static_cast<std::size_t>(
      std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
  d = std::min(d, datasets_.size() - 1);
  const auto& members = members_[d];
  s.subject = members[rng.uniform_index(members.size())];
  s.batch_seed = mix64(master_seed_, Stage::Batch, s.index);
  return s;
}

std::vector<std::string> CotrainingIterator::tags_of(
    const std::vector<std::shared_ptr<const LabeledSubject>>& subjects) {
  std::vector<std::string> tags;
  tags.reserve(subjects.size());
  for (const auto& s : subjects) tags.push_back(s->dataset_tag);
  return tags;
}

CotrainingIterator::CotrainingIterator(std::vector<std::shared_ptr<const LabeledSubject>> subjects,
                                       const std::map<std::string, double>& weights,
                                       std::uint64_t master_seed, PipelineConfig config,
                                       std::int64_t batch_size)
    : subjects_(std::move(subjects)),
      schedule_(tags_of(subjects_), weights, master_seed),
      config_(std::move(config)),
      batch_size_(batch_size) {}

Batch CotrainingIterator::next() {
  const auto step = schedule_.next();
  return generate_batch(*subjects_[step.subject], batch_size_, step.batch_seed, config_);
}

}  // namespace pathsynth
