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

/// @file volume.hpp
/// @brief 3D grid types shared by the generator: scalar images, label maps and
/// probability maps, plus trilinear / nearest sampling and resampling.
///
/// Index (i,j,k) sits at world position affine * (i,j,k,1). Data is stored
/// x-fastest: offset = i + nx * (j + ny * k), matching the NIfTI layout.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathsynth {

using Dims = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

Mat4 identity_affine();
Mat4 diagonal_affine(const Vec3& spacing);
Mat4 multiply(const Mat4& a, const Mat4& b);

/// Geometry shared by every volume flavor.
struct Grid {
  Dims dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Mat4 affine = identity_affine();

  Grid() = default;
  Grid(Dims d, Vec3 s);
  Grid(Dims d, Vec3 s, const Mat4& a);

  std::int64_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t offset(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
  }
  bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Dense voxel buffer over a Grid.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  explicit Image(Grid grid, T fill = T{})
      : grid_(std::move(grid)),
        data_(static_cast<std::size_t>(checked_count(grid_)), fill) {}
  Image(Grid grid, std::vector<T> data) : grid_(std::move(grid)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != checked_count(grid_)) {
      throw std::invalid_argument("data length does not match grid dims");
    }
  }

  const Grid& grid() const { return grid_; }
  const Dims& dims() const { return grid_.dims; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  T& at(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[grid_.offset(i, j, k)]; }
  const T& at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[grid_.offset(i, j, k)];
  }
  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static std::int64_t checked_count(const Grid& g) {
    g.validate();
    return g.voxel_count();
  }

  Grid grid_;
  std::vector<T> data_;
};

/// Scalar intensity image. Values must stay finite.
using Volume = Image<float>;

enum class TissueClass { Background, WhiteMatter, GrayMatter, Csf, Other };

const char* to_string(TissueClass t);
TissueClass tissue_class_from_string(const std::string& name);

using LabelTable = std::map<std::int32_t, TissueClass>;

/// Anatomy label map. Label 0 is background; every stored ID is in the table.
class LabelVolume {
 public:
  LabelVolume() = default;
  LabelVolume(Image<std::int32_t> labels, LabelTable table);

  const Grid& grid() const { return labels_.grid(); }
  const Image<std::int32_t>& labels() const { return labels_; }
  const LabelTable& table() const { return table_; }
  TissueClass tissue_of(std::int32_t label) const;

  friend bool operator==(const LabelVolume&, const LabelVolume&) = default;

 private:
  Image<std::int32_t> labels_;
  LabelTable table_;
};

/// Scalar map with every value in [0,1].
class ProbVolume {
 public:
  ProbVolume() = default;
  /// Throws std::invalid_argument if any value lies outside [0,1].
  explicit ProbVolume(Volume v);
  static ProbVolume zeros(const Grid& g) { return ProbVolume(Volume(g, 0.0f)); }

  const Grid& grid() const { return values_.grid(); }
  const Volume& values() const { return values_; }
  float operator[](std::size_t n) const { return values_[n]; }
  std::int64_t size() const { return values_.size(); }

  friend bool operator==(const ProbVolume&, const ProbVolume&) = default;

 private:
  Volume values_;
};

/// Sampling outside [-0.5, dim-0.5] on any axis returns this value.
struct BorderPolicy {
  float value = 0.0f;
};

struct LabelBorderPolicy {
  std::int32_t value = 0;
};

/// Trilinear interpolation at a continuous voxel coordinate. Points inside the
/// half-voxel margin are clamped to the edge voxels.
float trilinear_sample(const Volume& v, const Vec3& point, BorderPolicy border = {});

/// Nearest voxel center; exact halves round toward the lower index.
std::int32_t nearest_sample(const LabelVolume& v, const Vec3& point,
                            LabelBorderPolicy border = {});

enum class InterpMode { Trilinear, Nearest };

/// Resample onto a grid covering the same world extent (corner aligned).
Volume resample(const Volume& v, const Dims& target_dims, const Vec3& target_spacing,
                InterpMode mode = InterpMode::Trilinear);

/// Throws std::domain_error if any voxel is NaN or Inf.
void require_finite(const Volume& v, const char* what);

}  // namespace pathsynth
