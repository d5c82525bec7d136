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

/// @file deformation.hpp
/// @brief Random affine + smooth nonlinear deformation fields and pull-back
/// warping of label maps, probability maps and images.
///
/// A field is defined on an output grid and stores, for every output voxel,
/// the continuous source voxel coordinate it samples from:
///   source(x) = x + offset + displacement(x)
/// where offset centres the output grid in the source grid. Displacements are
/// in source voxel units.

#pragma once

#include <cstdint>
#include <vector>

#include "pathsynth/volume.hpp"

namespace pathsynth {

struct DeformationConfig {
  double rotation_deg = 15.0;      ///< per-axis rotation in [-r, r]
  double scaling = 0.15;           ///< per-axis scale in [1-s, 1+s]
  double shear = 0.012;            ///< per-axis shear in [-h, h]
  double translation_mm = 5.0;     ///< per-axis translation in [-t, t]
  double nonlinear_std_mm = 3.0;   ///< control-point displacement stddev
  double nonlinear_cap_mm = 10.0;  ///< control-point displacement magnitude cap
  std::int64_t control_points = 8; ///< per-axis coarse grid size (>= 2)

  static DeformationConfig none();
  void validate() const;
};

struct AffineParams {
  Vec3 rotation_deg{0.0, 0.0, 0.0};
  Vec3 scaling{1.0, 1.0, 1.0};
  Vec3 shear{0.0, 0.0, 0.0};  ///< xy, xz, yz
  Vec3 translation_mm{0.0, 0.0, 0.0};
};

/// Coarse displacement lattice in mm, one Vec3 per control point, x-fastest.
struct ControlGrid {
  std::int64_t n = 0;  ///< 0 means no nonlinear part
  std::vector<Vec3> displacement_mm;
};

class DeformationField {
 public:
  /// Builds the dense field for an output grid of `out_dims` pulling from a
  /// source grid of `source_dims`, both with voxel size `spacing`.
  static DeformationField build(const Dims& source_dims, const Dims& out_dims,
                                const Vec3& spacing, const AffineParams& affine,
                                const ControlGrid& control, std::uint64_t seed = 0);

  const Dims& source_dims() const { return source_dims_; }
  const Dims& out_dims() const { return out_dims_; }
  const Vec3& spacing() const { return spacing_; }
  const std::array<std::int64_t, 3>& offset() const { return offset_; }
  const AffineParams& affine() const { return affine_; }
  const ControlGrid& control() const { return control_; }
  std::uint64_t seed() const { return seed_; }

  /// Displacement in source voxel units at output voxel n.
  const std::array<float, 3>& displacement(std::size_t n) const { return disp_[n]; }
  Vec3 source_point(std::int64_t i, std::int64_t j, std::int64_t k) const;

  /// Output grid geometry derived from the source grid (same spacing,
  /// affine shifted by the centring offset).
  Grid output_grid(const Grid& source) const;

  bool is_identity() const;

 private:
  Dims source_dims_{1, 1, 1};
  Dims out_dims_{1, 1, 1};
  Vec3 spacing_{1.0, 1.0, 1.0};
  std::array<std::int64_t, 3> offset_{0, 0, 0};
  AffineParams affine_;
  ControlGrid control_;
  std::uint64_t seed_ = 0;
  std::vector<std::array<float, 3>> disp_;
};

/// Draws affine and nonlinear parameters from `config` and builds the field.
/// out_dims defaults to the source dims when zero.
DeformationField sample_deformation(const Dims& dims, const Vec3& spacing,
                                    const DeformationConfig& config, std::uint64_t rng_seed,
                                    const Dims& out_dims = {0, 0, 0});

LabelVolume warp_labels(const LabelVolume& labels, const DeformationField& field);
Volume warp_volume(const Volume& v, const DeformationField& field);
ProbVolume warp_volume(const ProbVolume& v, const DeformationField& field);

}  // namespace pathsynth
