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

#include "pathsynth/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pathsynth/random.hpp"

namespace pathsynth {

namespace {

// Sub-stream tags inside one corruption seed.
constexpr std::uint64_t kBiasStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kGammaStream = 3;

constexpr std::int64_t kBiasLattice = 4;

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::int64_t r = -radius; r <= radius; ++r) {
    const double w = std::exp(-0.5 * static_cast<double>(r * r) / (sigma * sigma));
    k[static_cast<std::size_t>(r + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

void blur_axis(Volume& v, int axis, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
  const Dims d = v.dims();
  const std::int64_t len = d[axis];
  const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? d[0] : d[0] * d[1]);
  std::vector<double> line(static_cast<std::size_t>(len));

  // Iterate over all lines parallel to `axis`.
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  for (std::int64_t q = 0; q < d[a2]; ++q) {
    for (std::int64_t p = 0; p < d[a1]; ++p) {
      std::int64_t idx[3] = {0, 0, 0};
      idx[a1] = p;
      idx[a2] = q;
      const std::size_t base = v.grid().offset(idx[0], idx[1], idx[2]);
      for (std::int64_t t = 0; t < len; ++t) line[t] = v[base + t * stride];
      for (std::int64_t t = 0; t < len; ++t) {
        double acc = 0.0;
        for (std::int64_t r = -radius; r <= radius; ++r) {
          const std::int64_t s = std::clamp(t + r, std::int64_t{0}, len - 1);
          acc += kernel[static_cast<std::size_t>(r + radius)] * line[s];
        }
        v[base + t * stride] = static_cast<float>(acc);
      }
    }
  }
}

}  // namespace

CorruptionSpec CorruptionSpec::draw(double severity, const Vec3& native_spacing,
                                    const CorruptionCaps& caps, std::uint64_t rng_seed) {
  if (!(severity >= 0.0 && severity <= 1.0)) {
    throw std::invalid_argument("severity must be in [0,1]");
  }
  CorruptionSpec spec;
  spec.severity = severity;
  spec.rng_seed = rng_seed;
  Rng rng(rng_seed);
  const auto slice_axis = static_cast<int>(rng.uniform_index(3));
  for (int a = 0; a < 3; ++a) {
    const double cap = a == slice_axis ? caps.slice_spacing_mm : caps.inplane_spacing_mm;
    const double hi = native_spacing[a] + severity * std::max(0.0, cap - native_spacing[a]);
    spec.target_spacing[a] = rng.uniform(native_spacing[a], hi);
  }
  spec.bias_strength = rng.uniform(0.0, caps.bias_strength * severity);
  spec.noise_std = rng.uniform(0.0, caps.noise_std * severity);
  spec.gamma_log_std = rng.uniform(0.0, caps.gamma_log_std * severity);
  return spec;
}

bool CorruptionSpec::is_identity() const { return severity == 0.0; }

void CorruptionSpec::validate() const {
  if (!(severity >= 0.0 && severity <= 1.0)) {
    throw std::invalid_argument("severity must be in [0,1]");
  }
  for (double v : {bias_strength, noise_std, gamma_log_std, target_spacing[0], target_spacing[1],
                   target_spacing[2]}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("corruption magnitudes must be finite and >= 0");
    }
  }
}

Vec3 blur_sigma_for_spacing(const Vec3& target_spacing, const Vec3& native_spacing) {
  Vec3 sigma;
  for (int a = 0; a < 3; ++a) {
    sigma[a] = std::max(0.0, 0.85 * (target_spacing[a] / native_spacing[a] - 1.0) / 2.0);
  }
  return sigma;
}

Volume gaussian_blur(const Volume& v, const Vec3& sigma_vox) {
  Volume out = v;
  for (int a = 0; a < 3; ++a) {
    if (sigma_vox[a] > 0.0 && v.dims()[a] > 1) blur_axis(out, a, sigma_vox[a]);
  }
  return out;
}

Volume bias_field(const Volume& s, double strength, std::uint64_t seed) {
  Rng rng(seed);
  const Grid lattice_grid({kBiasLattice, kBiasLattice, kBiasLattice}, {1.0, 1.0, 1.0});
  Volume lattice(lattice_grid, 0.0f);
  for (float& x : lattice.storage()) x = static_cast<float>(rng.normal(0.0, strength));

  const Dims& d = s.dims();
  Volume field(s.grid(), 1.0f);
  Vec3 scale;
  for (int a = 0; a < 3; ++a) {
    scale[a] = d[a] > 1 ? static_cast<double>(kBiasLattice - 1) / static_cast<double>(d[a] - 1) : 0.0;
  }
  double sum_mask = 0.0;
  double sum_all = 0.0;
  std::int64_t n_mask = 0;
  for (std::int64_t k = 0; k < d[2]; ++k) {
    for (std::int64_t j = 0; j < d[1]; ++j) {
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const Vec3 p{static_cast<double>(i) * scale[0], static_cast<double>(j) * scale[1],
                     static_cast<double>(k) * scale[2]};
        const double f = std::exp(static_cast<double>(trilinear_sample(lattice, p)));
        field.at(i, j, k) = static_cast<float>(f);
        sum_all += f;
        if (s.at(i, j, k) > 0.0f) {
          sum_mask += f;
          ++n_mask;
        }
      }
    }
  }
  const double mean = n_mask > 0 ? sum_mask / static_cast<double>(n_mask)
                                 : sum_all / static_cast<double>(s.size());
  for (float& x : field.storage()) x = static_cast<float>(static_cast<double>(x) / mean);
  return field;
}

Volume corrupt(const Volume& s, const CorruptionSpec& spec) {
  spec.validate();
  if (spec.is_identity()) return s;

  const Grid& grid = s.grid();
  Volume out = s;

  // (1) + (2): blur matched to the simulated spacing, then down/up resample.
  Vec3 target = spec.target_spacing;
  for (int a = 0; a < 3; ++a) {
    if (target[a] < grid.spacing[a]) target[a] = grid.spacing[a];
  }
  if (target != grid.spacing) {
    out = gaussian_blur(out, blur_sigma_for_spacing(target, grid.spacing));
    Dims low_dims;
    Vec3 low_spacing;
    for (int a = 0; a < 3; ++a) {
      const double extent = static_cast<double>(grid.dims[a]) * grid.spacing[a];
      low_dims[a] = std::max<std::int64_t>(1, std::llround(extent / target[a]));
      low_spacing[a] = low_dims[a] == grid.dims[a] ? grid.spacing[a]
                                                    : extent / static_cast<double>(low_dims[a]);
    }
    const Volume low = resample(out, low_dims, low_spacing);
    out = resample(low, grid.dims, grid.spacing);
    out = Volume(grid, std::move(out.storage()));
  }

  // (3) multiplicative bias
  if (spec.bias_strength > 0.0) {
    const Volume field = bias_field(s, spec.bias_strength, mix64(spec.rng_seed, kBiasStream, 0));
    for (std::int64_t n = 0; n < out.size(); ++n) out[n] *= field[n];
  }

  // (4) additive noise
  if (spec.noise_std > 0.0) {
    Rng rng(mix64(spec.rng_seed, kNoiseStream, 0));
    for (float& x : out.storage()) {
      x = static_cast<float>(static_cast<double>(x) + rng.normal(0.0, spec.noise_std));
    }
  }

  // (5) gamma, (6) clamp
  if (spec.gamma_log_std > 0.0) {
    Rng rng(mix64(spec.rng_seed, kGammaStream, 0));
    const double g = std::exp(rng.normal(0.0, spec.gamma_log_std));
    for (float& x : out.storage()) {
      x = static_cast<float>(std::pow(std::clamp(static_cast<double>(x), 0.0, 1.0), g));
    }
  }
  for (float& x : out.storage()) x = std::clamp(x, 0.0f, 1.0f);
  return out;
}

}  // namespace pathsynth
