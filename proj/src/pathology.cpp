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

#include "pathsynth/pathology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pathsynth/random.hpp"

namespace pathsynth {

const char* to_string(ModalityClass m) {
  return m == ModalityClass::T1wLike ? "t1w" : "t2w-flair";
}

ModalityClass modality_from_string(const std::string& name) {
  if (name == "t1w" || name == "T1w" || name == "mprage") return ModalityClass::T1wLike;
  if (name == "t2w" || name == "T2w" || name == "flair" || name == "FLAIR" || name == "t2w-flair") {
    return ModalityClass::T2wFlairLike;
  }
  throw std::invalid_argument("unknown modality '" + name + "'");
}

const char* to_string(ShiftDirection d) { return d == ShiftDirection::Darken ? "darken" : "brighten"; }

ProbVolume anomaly_probability(const Volume& image, const Image<std::uint8_t>& region,
                               ModalityClass modality) {
  if (!(image.grid().dims == region.grid().dims)) {
    throw std::invalid_argument("anomaly_probability: region grid does not match image");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::int64_t n = 0; n < image.size(); ++n) {
    if (region[n] == 0) continue;
    lo = std::min(lo, static_cast<double>(image[n]));
    hi = std::max(hi, static_cast<double>(image[n]));
  }

  Volume out(image.grid(), 0.0f);
  if (!(lo <= hi)) return ProbVolume(std::move(out));  // empty region

  const double range = hi - lo;
  for (std::int64_t n = 0; n < image.size(); ++n) {
    if (region[n] == 0) continue;
    if (range == 0.0) {
      out[n] = 1.0f;
      continue;
    }
    const double r = (static_cast<double>(image[n]) - lo) / range;
    const double p = modality == ModalityClass::T1wLike ? 1.0 - r : r;
    out[n] = static_cast<float>(std::clamp(p, 0.0, 1.0));
  }
  return ProbVolume(std::move(out));
}

Volume sample_anomaly_free(const LabelVolume& labels, const ContrastSpec& spec) {
  for (const auto& [id, tissue] : labels.table()) {
    (void)tissue;
    if (!spec.per_label.contains(id)) {
      throw std::invalid_argument("contrast spec has no entry for label " + std::to_string(id));
    }
  }
  Rng rng(spec.rng_seed);
  const auto& ids = labels.labels();
  Volume out(ids.grid(), 0.0f);

  // Cache the last lookup; label maps come in long runs.
  std::int32_t last_id = std::numeric_limits<std::int32_t>::min();
  Gaussian g;
  for (std::int64_t n = 0; n < ids.size(); ++n) {
    if (ids[n] != last_id) {
      last_id = ids[n];
      g = spec.per_label.at(last_id);
    }
    const double x = g.stddev > 0.0 ? rng.normal(g.mean, g.stddev) : g.mean;
    out[n] = static_cast<float>(std::clamp(x, 0.0, 1.0));
  }
  return out;
}

std::pair<double, double> white_gray_means(const Volume& s0, const LabelVolume& labels) {
  if (!(s0.grid().dims == labels.grid().dims)) {
    throw std::invalid_argument("white_gray_means: grid mismatch");
  }
  double sum_w = 0.0;
  double sum_g = 0.0;
  std::int64_t n_w = 0;
  std::int64_t n_g = 0;
  const auto& ids = labels.labels();
  std::int32_t last_id = std::numeric_limits<std::int32_t>::min();
  TissueClass tissue = TissueClass::Background;
  for (std::int64_t n = 0; n < s0.size(); ++n) {
    if (ids[n] != last_id) {
      last_id = ids[n];
      tissue = labels.tissue_of(last_id);
    }
    if (tissue == TissueClass::WhiteMatter) {
      sum_w += s0[n];
      ++n_w;
    } else if (tissue == TissueClass::GrayMatter) {
      sum_g += s0[n];
      ++n_g;
    }
  }
  if (n_w == 0 || n_g == 0) throw std::invalid_argument("missing tissue class");
  return {sum_w / static_cast<double>(n_w), sum_g / static_cast<double>(n_g)};
}

Image<std::int32_t> connected_components(const Image<std::uint8_t>& mask, std::int32_t* count) {
  const Dims& d = mask.dims();
  Image<std::int32_t> comp(mask.grid(), 0);
  std::int32_t next = 0;
  std::vector<std::int64_t> stack;
  for (std::int64_t seed = 0; seed < mask.size(); ++seed) {
    if (mask[seed] == 0 || comp[seed] != 0) continue;
    ++next;
    comp[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::int64_t n = stack.back();
      stack.pop_back();
      const std::int64_t i = n % d[0];
      const std::int64_t j = (n / d[0]) % d[1];
      const std::int64_t k = n / (d[0] * d[1]);
      const std::int64_t nb[6][3] = {{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k},
                                     {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}};
      for (const auto& q : nb) {
        if (!mask.grid().contains(q[0], q[1], q[2])) continue;
        const std::size_t m = mask.grid().offset(q[0], q[1], q[2]);
        if (mask[m] != 0 && comp[m] == 0) {
          comp[m] = next;
          stack.push_back(static_cast<std::int64_t>(m));
        }
      }
    }
  }
  if (count != nullptr) *count = next;
  return comp;
}

std::pair<Volume, PathologyDraw> enhance_pathology(const Volume& s0, const ProbVolume& p,
                                                   const LabelVolume& labels,
                                                   std::uint64_t rng_seed,
                                                   const EnhanceOptions& options) {
  if (!(s0.grid().dims == p.grid().dims) || !(s0.grid().dims == labels.grid().dims)) {
    throw std::invalid_argument("enhance_pathology: grid mismatch");
  }
  const auto [mu_w, mu_g] = white_gray_means(s0, labels);

  PathologyDraw draw;
  draw.mu_w = mu_w;
  draw.mu_g = mu_g;
  draw.direction = mu_w > mu_g ? ShiftDirection::Darken : ShiftDirection::Brighten;
  const double half = mu_w / 2.0;
  const double mean = draw.direction == ShiftDirection::Darken ? -half : half;

  Rng rng(rng_seed);
  draw.delta = rng.normal(mean, std::abs(half));

  Volume out = s0;
  auto apply = [&](std::int64_t n, double delta) {
    const double v = static_cast<double>(s0[n]) + delta * static_cast<double>(p[n]);
    out[n] = static_cast<float>(options.clamp ? std::clamp(v, 0.0, 1.0) : v);
  };

  if (options.granularity == ShiftGranularity::PerImage) {
    for (std::int64_t n = 0; n < s0.size(); ++n) {
      if (p[n] > 0.0f) apply(n, draw.delta);
    }
    return {std::move(out), draw};
  }

  Image<std::uint8_t> support(p.grid(), 0);
  for (std::int64_t n = 0; n < p.size(); ++n) support[n] = p[n] > 0.0f ? 1 : 0;
  std::int32_t count = 0;
  const auto comp = connected_components(support, &count);
  std::vector<double> deltas(static_cast<std::size_t>(count) + 1, 0.0);
  if (count > 0) deltas[1] = draw.delta;
  for (std::int32_t c = 2; c <= count; ++c) deltas[c] = rng.normal(mean, std::abs(half));
  for (std::int64_t n = 0; n < s0.size(); ++n) {
    if (comp[n] != 0) apply(n, deltas[comp[n]]);
  }
  return {std::move(out), draw};
}

}  // namespace pathsynth
