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

#include "pathsynth/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "pathsynth/corruption.hpp"

namespace pathsynth {

namespace {

void require_same_dims(const Volume& a, const Volume& b, const char* what) {
  if (a.dims() != b.dims()) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

double reduce(double sum, std::int64_t count, Reduction reduction) {
  return reduction == Reduction::Mean ? sum / static_cast<double>(count) : sum;
}

}  // namespace

std::array<Volume, 3> spatial_gradient(const Volume& v) {
  std::array<Volume, 3> g{Volume(v.grid(), 0.0f), Volume(v.grid(), 0.0f), Volume(v.grid(), 0.0f)};
  const Dims& d = v.dims();
  for (std::int64_t k = 0; k < d[2]; ++k) {
    for (std::int64_t j = 0; j < d[1]; ++j) {
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const float c = v.at(i, j, k);
        if (i + 1 < d[0]) g[0].at(i, j, k) = v.at(i + 1, j, k) - c;
        if (j + 1 < d[1]) g[1].at(i, j, k) = v.at(i, j + 1, k) - c;
        if (k + 1 < d[2]) g[2].at(i, j, k) = v.at(i, j, k + 1) - c;
      }
    }
  }
  return g;
}

double l1_term(const Volume& a, const Volume& b, Reduction reduction) {
  require_same_dims(a, b, "l1_term");
  double sum = 0.0;
  for (std::int64_t n = 0; n < a.size(); ++n) {
    sum += std::abs(static_cast<double>(a[n]) - static_cast<double>(b[n]));
  }
  return reduce(sum, a.size(), reduction);
}

double gradient_term(const Volume& a, const Volume& b, Reduction reduction) {
  require_same_dims(a, b, "gradient_term");
  // Differences in double: float gradients would round before the comparison.
  const Dims& d = a.dims();
  const std::int64_t stride[3] = {1, d[0], d[0] * d[1]};
  double sum = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    std::size_t n = 0;
    for (std::int64_t k = 0; k < d[2]; ++k) {
      for (std::int64_t j = 0; j < d[1]; ++j) {
        for (std::int64_t i = 0; i < d[0]; ++i, ++n) {
          const std::int64_t pos[3] = {i, j, k};
          if (pos[axis] + 1 >= d[axis]) continue;  // zero gradient on both sides
          const std::size_t m = n + static_cast<std::size_t>(stride[axis]);
          const double ga = static_cast<double>(a[m]) - static_cast<double>(a[n]);
          const double gb = static_cast<double>(b[m]) - static_cast<double>(b[n]);
          sum += std::abs(ga - gb);
        }
      }
    }
  }
  return reduce(sum, 3 * a.size(), reduction);
}

SynthesisLoss synthesis_loss(std::span<const SynthPrediction> preds,
                             std::span<const TargetView> targets, int alpha, int beta,
                             const SynthesisOptions& options) {
  if ((alpha != 0 && alpha != 1) || (beta != 0 && beta != 1)) {
    throw std::invalid_argument("availability flags must be 0 or 1");
  }
  if (preds.size() != targets.size()) {
    throw std::invalid_argument("synthesis_loss: predictions and targets differ in count");
  }
  SynthesisLoss out;
  out.per_sample.resize(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    SynthesisTerms& t = out.per_sample[i];
    if (alpha == 1) {
      if (targets[i].anat == nullptr) throw std::invalid_argument("alpha=1 but anatomy target missing");
      t.anat_l1 = l1_term(preds[i].anat, *targets[i].anat, options.reduction);
      t.anat_grad = options.lambda * gradient_term(preds[i].anat, *targets[i].anat, options.reduction);
      out.anat += t.anat_l1 + t.anat_grad;
    }
    if (beta == 1) {
      if (targets[i].pathol == nullptr) throw std::invalid_argument("beta=1 but pathology target missing");
      t.pathol_l1 = l1_term(preds[i].pathol, *targets[i].pathol, options.reduction);
      t.pathol_grad =
          options.lambda * gradient_term(preds[i].pathol, *targets[i].pathol, options.reduction);
      out.pathol += t.pathol_l1 + t.pathol_grad;
    }
  }
  out.total = out.anat + out.pathol;
  return out;
}

SegLoss seg_loss(const ProbVolume& pred, const ProbVolume& ref, const SegLossOptions& options) {
  if (pred.grid().dims != ref.grid().dims) throw std::invalid_argument("seg_loss: grid mismatch");
  double spq = 0.0;
  double sp = 0.0;
  double sq = 0.0;
  double bce = 0.0;
  const double lo = options.prob_clamp;
  const double log_hi = std::log1p(-lo);
  for (std::int64_t n = 0; n < pred.size(); ++n) {
    const double p = pred[n];
    const double q = ref[n];
    spq += p * q;
    sp += p;
    sq += q;
    // log(clamp(p)) and log(1 - clamp(p)) without forming the rounded bound
    // 1 - eps; 1 - p is exact for float p.
    const double r = 1.0 - p;
    const double log_p = r < lo ? log_hi : std::log(std::max(p, lo));
    const double log_r = p < lo ? log_hi : std::log(std::max(r, lo));
    bce -= q * log_p + (1.0 - q) * log_r;
  }
  SegLoss out;
  out.soft_dice = 1.0 - (2.0 * spq + options.epsilon) / (sp + sq + options.epsilon);
  out.bce = bce / static_cast<double>(pred.size());
  out.total = options.dice_weight * out.soft_dice + options.bce_weight * out.bce;
  return out;
}

ProbVolume ThresholdSegmenter::segment(const Volume& image) const {
  std::vector<float> brain;
  brain.reserve(static_cast<std::size_t>(image.size()));
  for (float x : image.data()) {
    if (x > options_.brain_threshold) brain.push_back(x);
  }
  if (brain.empty()) return ProbVolume::zeros(image.grid());

  auto median_of = [](std::vector<float>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return static_cast<double>(*mid);
  };
  const double median = median_of(brain);
  for (float& x : brain) x = static_cast<float>(std::abs(static_cast<double>(x) - median));
  const double mad = median_of(brain);
  const double cut = options_.k * mad;

  Volume indicator(image.grid(), 0.0f);
  for (std::int64_t n = 0; n < image.size(); ++n) {
    const double x = image[n];
    if (x > options_.brain_threshold && std::abs(x - median) > cut) indicator[n] = 1.0f;
  }
  const double s = options_.smoothing_sigma;
  Volume smooth = s > 0.0 ? gaussian_blur(indicator, {s, s, s}) : indicator;
  for (std::int64_t n = 0; n < image.size(); ++n) {
    smooth[n] = image[n] > options_.brain_threshold ? std::clamp(smooth[n], 0.0f, 1.0f) : 0.0f;
  }
  return ProbVolume(std::move(smooth));
}

ProbVolume IntensitySegmenter::segment(const Volume& image) const {
  Volume v = image;
  for (float& x : v.storage()) x = std::clamp(x, 0.0f, 1.0f);
  return ProbVolume(std::move(v));
}

PathologyLoss implicit_pathology_loss(std::span<const SynthPrediction> preds,
                                      std::span<const TargetView> targets,
                                      const ReferenceSegmenter& seg_anat,
                                      const ReferenceSegmenter& seg_pathol, int alpha, int beta,
                                      const SegLossOptions& options) {
  if ((alpha != 0 && alpha != 1) || (beta != 0 && beta != 1)) {
    throw std::invalid_argument("availability flags must be 0 or 1");
  }
  if (preds.size() != targets.size()) {
    throw std::invalid_argument("implicit_pathology_loss: predictions and targets differ in count");
  }
  std::map<const Volume*, ProbVolume> anat_refs;
  std::map<const Volume*, ProbVolume> pathol_refs;
  auto reference = [](std::map<const Volume*, ProbVolume>& cache, const ReferenceSegmenter& seg,
                      const Volume* target) -> const ProbVolume& {
    auto it = cache.find(target);
    if (it == cache.end()) it = cache.emplace(target, seg.segment(*target)).first;
    return it->second;
  };

  PathologyLoss out;
  out.per_sample.resize(preds.size(), {0.0, 0.0});
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (alpha == 1) {
      if (targets[i].anat == nullptr) throw std::invalid_argument("alpha=1 but anatomy target missing");
      require_same_dims(preds[i].anat, *targets[i].anat, "implicit_pathology_loss");
      const ProbVolume& ref = reference(anat_refs, seg_anat, targets[i].anat);
      out.per_sample[i][0] = seg_loss(seg_anat.segment(preds[i].anat), ref, options).total;
      out.seg_anat += out.per_sample[i][0];
    }
    if (beta == 1) {
      if (targets[i].pathol == nullptr) throw std::invalid_argument("beta=1 but pathology target missing");
      require_same_dims(preds[i].pathol, *targets[i].pathol, "implicit_pathology_loss");
      const ProbVolume& ref = reference(pathol_refs, seg_pathol, targets[i].pathol);
      out.per_sample[i][1] = seg_loss(seg_pathol.segment(preds[i].pathol), ref, options).total;
      out.seg_pathol += out.per_sample[i][1];
    }
  }
  out.total = out.seg_anat + out.seg_pathol;
  return out;
}

double total_loss(double l_synth, double l_pathol, const LossWeights& weights,
                  std::int64_t iteration) {
  return l_synth + weights.omega(iteration) * l_pathol;
}

LossReport evaluate_losses(std::span<const SynthPrediction> preds,
                           std::span<const TargetView> targets, const ReferenceSegmenter& seg_anat,
                           const ReferenceSegmenter& seg_pathol, int alpha, int beta,
                           const LossWeights& weights, std::int64_t iteration,
                           Reduction reduction) {
  const auto synth = synthesis_loss(preds, targets, alpha, beta, {weights.lambda, reduction});
  const auto pathol = implicit_pathology_loss(preds, targets, seg_anat, seg_pathol, alpha, beta);
  LossReport r;
  r.iteration = iteration;
  r.omega = weights.omega(iteration);
  r.l_anat = synth.anat;
  r.l_pathol = synth.pathol;
  r.l_synth = synth.total;
  r.l_seg_anat = pathol.seg_anat;
  r.l_seg_pathol = pathol.seg_pathol;
  r.l_pathol_total = pathol.total;
  r.total = total_loss(synth.total, pathol.total, weights, iteration);
  r.synth_per_sample = synth.per_sample;
  r.seg_per_sample = pathol.per_sample;
  return r;
}

std::string to_json_line(const LossReport& report) {
  nlohmann::json j;
  j["iteration"] = report.iteration;
  j["omega"] = report.omega;
  j["l_anat"] = report.l_anat;
  j["l_pathol"] = report.l_pathol;
  j["l_synth"] = report.l_synth;
  j["l_seg_anat"] = report.l_seg_anat;
  j["l_seg_pathol"] = report.l_seg_pathol;
  j["l_pathol_total"] = report.l_pathol_total;
  j["total"] = report.total;
  auto& samples = j["per_sample"] = nlohmann::json::array();
  for (std::size_t i = 0; i < report.synth_per_sample.size(); ++i) {
    const auto& t = report.synth_per_sample[i];
    nlohmann::json s{{"anat_l1", t.anat_l1},     {"anat_grad", t.anat_grad},
                     {"pathol_l1", t.pathol_l1}, {"pathol_grad", t.pathol_grad}};
    if (i < report.seg_per_sample.size()) {
      s["seg_anat"] = report.seg_per_sample[i][0];
      s["seg_pathol"] = report.seg_per_sample[i][1];
    }
    samples.push_back(std::move(s));
  }
  return j.dump();
}

}  // namespace pathsynth
