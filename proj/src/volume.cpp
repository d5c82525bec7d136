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

#include "pathsynth/volume.hpp"

#include <algorithm>
#include <cmath>

namespace pathsynth {

Mat4 identity_affine() {
  Mat4 m{};
  for (int r = 0; r < 4; ++r) m[r][r] = 1.0;
  return m;
}

Mat4 diagonal_affine(const Vec3& spacing) {
  Mat4 m = identity_affine();
  for (int r = 0; r < 3; ++r) m[r][r] = spacing[r];
  return m;
}

Mat4 multiply(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[r][k] * b[k][c];
      out[r][c] = s;
    }
  }
  return out;
}

Grid::Grid(Dims d, Vec3 s) : dims(d), spacing(s), affine(diagonal_affine(s)) { validate(); }

Grid::Grid(Dims d, Vec3 s, const Mat4& a) : dims(d), spacing(s), affine(a) { validate(); }

void Grid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] <= 0) throw std::invalid_argument("grid dims must be positive");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw std::invalid_argument("grid spacing must be positive and finite");
    }
  }
}

const char* to_string(TissueClass t) {
  switch (t) {
    case TissueClass::Background: return "background";
    case TissueClass::WhiteMatter: return "white-matter";
    case TissueClass::GrayMatter: return "gray-matter";
    case TissueClass::Csf: return "csf";
    case TissueClass::Other: return "other";
  }
  return "other";
}

TissueClass tissue_class_from_string(const std::string& name) {
  if (name == "background") return TissueClass::Background;
  if (name == "white-matter") return TissueClass::WhiteMatter;
  if (name == "gray-matter") return TissueClass::GrayMatter;
  if (name == "csf") return TissueClass::Csf;
  if (name == "other") return TissueClass::Other;
  throw std::invalid_argument("unknown tissue class '" + name + "'");
}

LabelVolume::LabelVolume(Image<std::int32_t> labels, LabelTable table)
    : labels_(std::move(labels)), table_(std::move(table)) {
  auto bg = table_.find(0);
  if (bg == table_.end()) {
    table_[0] = TissueClass::Background;
  } else if (bg->second != TissueClass::Background) {
    throw std::invalid_argument("label 0 must map to background");
  }
  // Scan distinct runs only; label maps are piecewise constant.
  std::int32_t last = 0;
  for (std::int32_t id : labels_.data()) {
    if (id == last) continue;
    if (id < 0) throw std::invalid_argument("negative label " + std::to_string(id));
    if (!table_.contains(id)) {
      throw std::invalid_argument("label " + std::to_string(id) + " missing from label table");
    }
    last = id;
  }
}

TissueClass LabelVolume::tissue_of(std::int32_t label) const {
  auto it = table_.find(label);
  if (it == table_.end()) {
    throw std::out_of_range("label " + std::to_string(label) + " missing from label table");
  }
  return it->second;
}

ProbVolume::ProbVolume(Volume v) : values_(std::move(v)) {
  for (float x : values_.data()) {
    if (!(x >= 0.0f && x <= 1.0f)) {
      throw std::invalid_argument("probability value outside [0,1]");
    }
  }
}

namespace {

void check_point(const Vec3& p) {
  for (double c : p) {
    if (!std::isfinite(c)) throw std::invalid_argument("invalid coordinate");
  }
}

bool outside(const Dims& d, const Vec3& p) {
  for (int a = 0; a < 3; ++a) {
    if (p[a] < -0.5 || p[a] > static_cast<double>(d[a]) - 0.5) return true;
  }
  return false;
}

}  // namespace

float trilinear_sample(const Volume& v, const Vec3& point, BorderPolicy border) {
  check_point(point);
  const Dims& d = v.dims();
  if (outside(d, point)) return border.value;

  std::int64_t i0[3];
  std::int64_t i1[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp(point[a], 0.0, static_cast<double>(d[a] - 1));
    const double f = std::floor(c);
    i0[a] = static_cast<std::int64_t>(f);
    i1[a] = std::min(i0[a] + 1, d[a] - 1);
    t[a] = c - f;
  }
  // Nested lerps keep constants exact: a + t*(a-a) == a.
  auto lerp = [](double a, double b, double w) { return a + w * (b - a); };
  auto val = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return static_cast<double>(v.at(i, j, k));
  };
  const double c00 = lerp(val(i0[0], i0[1], i0[2]), val(i1[0], i0[1], i0[2]), t[0]);
  const double c10 = lerp(val(i0[0], i1[1], i0[2]), val(i1[0], i1[1], i0[2]), t[0]);
  const double c01 = lerp(val(i0[0], i0[1], i1[2]), val(i1[0], i0[1], i1[2]), t[0]);
  const double c11 = lerp(val(i0[0], i1[1], i1[2]), val(i1[0], i1[1], i1[2]), t[0]);
  const double c0 = lerp(c00, c10, t[1]);
  const double c1 = lerp(c01, c11, t[1]);
  return static_cast<float>(lerp(c0, c1, t[2]));
}

std::int32_t nearest_sample(const LabelVolume& v, const Vec3& point, LabelBorderPolicy border) {
  check_point(point);
  const Dims& d = v.grid().dims;
  if (outside(d, point)) return border.value;
  std::int64_t idx[3];
  for (int a = 0; a < 3; ++a) {
    // ceil(p - 0.5) sends exact halves to the lower index.
    idx[a] = std::clamp(static_cast<std::int64_t>(std::ceil(point[a] - 0.5)),
                        std::int64_t{0}, d[a] - 1);
  }
  return v.labels().at(idx[0], idx[1], idx[2]);
}

Volume resample(const Volume& v, const Dims& target_dims, const Vec3& target_spacing,
                InterpMode mode) {
  const Grid& src = v.grid();
  Grid probe;
  probe.dims = target_dims;
  probe.spacing = target_spacing;
  probe.validate();

  if (target_dims == src.dims && target_spacing == src.spacing) return v;

  Vec3 ratio;
  for (int a = 0; a < 3; ++a) ratio[a] = target_spacing[a] / src.spacing[a];

  // out index i -> source coordinate (i + 0.5) * ratio - 0.5
  Mat4 index_map = identity_affine();
  for (int a = 0; a < 3; ++a) {
    index_map[a][a] = ratio[a];
    index_map[a][3] = 0.5 * ratio[a] - 0.5;
  }
  Volume out(Grid(target_dims, target_spacing, multiply(src.affine, index_map)));

  for (std::int64_t k = 0; k < target_dims[2]; ++k) {
    const double z = (static_cast<double>(k) + 0.5) * ratio[2] - 0.5;
    for (std::int64_t j = 0; j < target_dims[1]; ++j) {
      const double y = (static_cast<double>(j) + 0.5) * ratio[1] - 0.5;
      for (std::int64_t i = 0; i < target_dims[0]; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * ratio[0] - 0.5;
        if (mode == InterpMode::Trilinear) {
          out.at(i, j, k) = trilinear_sample(v, {x, y, z});
        } else {
          const Vec3 p{x, y, z};
          if (outside(src.dims, p)) {
            out.at(i, j, k) = 0.0f;
            continue;
          }
          std::int64_t idx[3];
          for (int a = 0; a < 3; ++a) {
            idx[a] = std::clamp(static_cast<std::int64_t>(std::ceil(p[a] - 0.5)),
                                std::int64_t{0}, src.dims[a] - 1);
          }
          out.at(i, j, k) = v.at(idx[0], idx[1], idx[2]);
        }
      }
    }
  }
  return out;
}

void require_finite(const Volume& v, const char* what) {
  for (float x : v.data()) {
    if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite value");
  }
}

}  // namespace pathsynth
