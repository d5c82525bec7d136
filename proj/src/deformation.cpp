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

#include "pathsynth/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pathsynth/random.hpp"

namespace pathsynth {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) out[r][c] += a[r][k] * b[k][c];
  return out;
}

Mat3 linear_part(const AffineParams& p) {
  const double deg = std::numbers::pi / 180.0;
  const double ax = p.rotation_deg[0] * deg;
  const double ay = p.rotation_deg[1] * deg;
  const double az = p.rotation_deg[2] * deg;
  const Mat3 rx{{{1, 0, 0}, {0, std::cos(ax), -std::sin(ax)}, {0, std::sin(ax), std::cos(ax)}}};
  const Mat3 ry{{{std::cos(ay), 0, std::sin(ay)}, {0, 1, 0}, {-std::sin(ay), 0, std::cos(ay)}}};
  const Mat3 rz{{{std::cos(az), -std::sin(az), 0}, {std::sin(az), std::cos(az), 0}, {0, 0, 1}}};
  const Mat3 sh{{{1, p.shear[0], p.shear[1]}, {0, 1, p.shear[2]}, {0, 0, 1}}};
  const Mat3 sc{{{p.scaling[0], 0, 0}, {0, p.scaling[1], 0}, {0, 0, p.scaling[2]}}};
  return mul(mul(mul(rz, ry), mul(rx, sh)), sc);
}

// Per-axis lattice lookup for upsampling the control grid.
struct AxisWeights {
  std::vector<std::int64_t> lo;
  std::vector<double> t;
};

AxisWeights axis_weights(std::int64_t dim, std::int64_t n) {
  AxisWeights w;
  w.lo.resize(static_cast<std::size_t>(dim));
  w.t.resize(static_cast<std::size_t>(dim));
  for (std::int64_t x = 0; x < dim; ++x) {
    const double c = dim > 1 ? static_cast<double>(x) * static_cast<double>(n - 1) /
                                   static_cast<double>(dim - 1)
                             : 0.0;
    const auto lo = std::min(static_cast<std::int64_t>(std::floor(c)), n - 2);
    w.lo[x] = lo;
    w.t[x] = c - static_cast<double>(lo);
  }
  return w;
}

}  // namespace

DeformationConfig DeformationConfig::none() {
  DeformationConfig c;
  c.rotation_deg = 0.0;
  c.scaling = 0.0;
  c.shear = 0.0;
  c.translation_mm = 0.0;
  c.nonlinear_std_mm = 0.0;
  c.nonlinear_cap_mm = 0.0;
  return c;
}

void DeformationConfig::validate() const {
  for (double v : {rotation_deg, scaling, shear, translation_mm, nonlinear_std_mm,
                   nonlinear_cap_mm}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("deformation ranges must be finite and >= 0");
    }
  }
  if (scaling >= 1.0) throw std::invalid_argument("deformation scaling range must be < 1");
  if (control_points < 2) throw std::invalid_argument("deformation control_points must be >= 2");
}

DeformationField DeformationField::build(const Dims& source_dims, const Dims& out_dims,
                                         const Vec3& spacing, const AffineParams& affine,
                                         const ControlGrid& control, std::uint64_t seed) {
  Grid(source_dims, spacing).validate();
  Grid(out_dims, spacing).validate();
  if (control.n != 0 &&
      static_cast<std::int64_t>(control.displacement_mm.size()) != control.n * control.n * control.n) {
    throw std::invalid_argument("control grid size mismatch");
  }
  if (control.n == 1) throw std::invalid_argument("control grid needs >= 2 points per axis");

  DeformationField f;
  f.source_dims_ = source_dims;
  f.out_dims_ = out_dims;
  f.spacing_ = spacing;
  f.affine_ = affine;
  f.control_ = control;
  f.seed_ = seed;
  for (int a = 0; a < 3; ++a) f.offset_[a] = (source_dims[a] - out_dims[a]) / 2;

  Mat3 m = linear_part(affine);
  for (int a = 0; a < 3; ++a) m[a][a] -= 1.0;  // A - I keeps pure translation exact

  Vec3 centre;
  for (int a = 0; a < 3; ++a) centre[a] = 0.5 * static_cast<double>(out_dims[a] - 1);

  const std::int64_t n = control.n;
  AxisWeights wx, wy, wz;
  if (n > 0) {
    wx = axis_weights(out_dims[0], n);
    wy = axis_weights(out_dims[1], n);
    wz = axis_weights(out_dims[2], n);
  }
  auto ctrl = [&](std::int64_t i, std::int64_t j, std::int64_t k) -> const Vec3& {
    return control.displacement_mm[static_cast<std::size_t>(i + n * (j + n * k))];
  };

  f.disp_.resize(static_cast<std::size_t>(out_dims[0] * out_dims[1] * out_dims[2]));
  std::size_t idx = 0;
  for (std::int64_t k = 0; k < out_dims[2]; ++k) {
    const double rz = (static_cast<double>(k) - centre[2]) * spacing[2];
    for (std::int64_t j = 0; j < out_dims[1]; ++j) {
      const double ry = (static_cast<double>(j) - centre[1]) * spacing[1];
      for (std::int64_t i = 0; i < out_dims[0]; ++i, ++idx) {
        const double rx = (static_cast<double>(i) - centre[0]) * spacing[0];
        Vec3 d_mm;
        for (int a = 0; a < 3; ++a) {
          d_mm[a] = m[a][0] * rx + m[a][1] * ry + m[a][2] * rz + affine.translation_mm[a];
        }
        if (n > 0) {
          const std::int64_t x0 = wx.lo[i], y0 = wy.lo[j], z0 = wz.lo[k];
          const double tx = wx.t[i], ty = wy.t[j], tz = wz.t[k];
          for (int a = 0; a < 3; ++a) {
            auto lerp = [](double p, double q, double w) { return p + w * (q - p); };
            const double c00 = lerp(ctrl(x0, y0, z0)[a], ctrl(x0 + 1, y0, z0)[a], tx);
            const double c10 = lerp(ctrl(x0, y0 + 1, z0)[a], ctrl(x0 + 1, y0 + 1, z0)[a], tx);
            const double c01 = lerp(ctrl(x0, y0, z0 + 1)[a], ctrl(x0 + 1, y0, z0 + 1)[a], tx);
            const double c11 =
                lerp(ctrl(x0, y0 + 1, z0 + 1)[a], ctrl(x0 + 1, y0 + 1, z0 + 1)[a], tx);
            d_mm[a] += lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz);
          }
        }
        for (int a = 0; a < 3; ++a) {
          const double d = d_mm[a] / spacing[a];
          if (!std::isfinite(d)) throw std::domain_error("deformation field is not finite");
          f.disp_[idx][a] = static_cast<float>(d);
        }
      }
    }
  }
  return f;
}

Vec3 DeformationField::source_point(std::int64_t i, std::int64_t j, std::int64_t k) const {
  const auto& d = disp_[static_cast<std::size_t>(i + out_dims_[0] * (j + out_dims_[1] * k))];
  return {static_cast<double>(i + offset_[0]) + d[0], static_cast<double>(j + offset_[1]) + d[1],
          static_cast<double>(k + offset_[2]) + d[2]};
}

Grid DeformationField::output_grid(const Grid& source) const {
  if (source.dims != source_dims_) throw std::invalid_argument("deformation: source grid mismatch");
  Mat4 shift = identity_affine();
  for (int a = 0; a < 3; ++a) shift[a][3] = static_cast<double>(offset_[a]);
  return Grid(out_dims_, source.spacing, multiply(source.affine, shift));
}

bool DeformationField::is_identity() const {
  if (source_dims_ != out_dims_) return false;
  return std::all_of(disp_.begin(), disp_.end(), [](const auto& d) {
    return d[0] == 0.0f && d[1] == 0.0f && d[2] == 0.0f;
  });
}

DeformationField sample_deformation(const Dims& dims, const Vec3& spacing,
                                    const DeformationConfig& config, std::uint64_t rng_seed,
                                    const Dims& out_dims) {
  config.validate();
  Rng rng(rng_seed);
  AffineParams p;
  for (int a = 0; a < 3; ++a) p.rotation_deg[a] = rng.uniform(-config.rotation_deg, config.rotation_deg);
  for (int a = 0; a < 3; ++a) p.scaling[a] = 1.0 + rng.uniform(-config.scaling, config.scaling);
  for (int a = 0; a < 3; ++a) p.shear[a] = rng.uniform(-config.shear, config.shear);
  for (int a = 0; a < 3; ++a) {
    p.translation_mm[a] = rng.uniform(-config.translation_mm, config.translation_mm);
  }

  ControlGrid control;
  if (config.nonlinear_std_mm > 0.0 && config.nonlinear_cap_mm > 0.0) {
    const std::int64_t n = config.control_points;
    control.n = n;
    control.displacement_mm.resize(static_cast<std::size_t>(n * n * n));
    for (auto& d : control.displacement_mm) {
      for (auto& c : d) c = rng.normal(0.0, config.nonlinear_std_mm);
      const double mag = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      if (mag > config.nonlinear_cap_mm) {
        for (auto& c : d) c *= config.nonlinear_cap_mm / mag;
      }
    }
  }
  const Dims out = out_dims[0] > 0 ? out_dims : dims;
  return DeformationField::build(dims, out, spacing, p, control, rng_seed);
}

LabelVolume warp_labels(const LabelVolume& labels, const DeformationField& field) {
  const Grid out_grid = field.output_grid(labels.grid());
  const auto& src = labels.labels();
  const Dims& sd = src.dims();
  Image<std::int32_t> out(out_grid, 0);
  const Dims& od = out_grid.dims;
  for (std::int64_t k = 0; k < od[2]; ++k) {
    for (std::int64_t j = 0; j < od[1]; ++j) {
      for (std::int64_t i = 0; i < od[0]; ++i) {
        const Vec3 p = field.source_point(i, j, k);
        std::int64_t idx[3];
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          if (p[a] < -0.5 || p[a] > static_cast<double>(sd[a]) - 0.5) {
            inside = false;
            break;
          }
          idx[a] = std::clamp(static_cast<std::int64_t>(std::ceil(p[a] - 0.5)), std::int64_t{0},
                              sd[a] - 1);
        }
        if (inside) out.at(i, j, k) = src.at(idx[0], idx[1], idx[2]);
      }
    }
  }
  return LabelVolume(std::move(out), labels.table());
}

Volume warp_volume(const Volume& v, const DeformationField& field) {
  const Grid out_grid = field.output_grid(v.grid());
  Volume out(out_grid, 0.0f);
  const Dims& od = out_grid.dims;
  for (std::int64_t k = 0; k < od[2]; ++k) {
    for (std::int64_t j = 0; j < od[1]; ++j) {
      for (std::int64_t i = 0; i < od[0]; ++i) {
        out.at(i, j, k) = trilinear_sample(v, field.source_point(i, j, k));
      }
    }
  }
  return out;
}

ProbVolume warp_volume(const ProbVolume& v, const DeformationField& field) {
  Volume w = warp_volume(v.values(), field);
  // Convex weights can overshoot 1 by an ulp in float; pin to the range.
  for (float& x : w.storage()) x = std::clamp(x, 0.0f, 1.0f);
  return ProbVolume(std::move(w));
}

}  // namespace pathsynth
