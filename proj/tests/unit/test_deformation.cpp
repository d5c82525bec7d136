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

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pathsynth/deformation.hpp"
#include "pathsynth/phantom.hpp"

using namespace pathsynth;

namespace {

DeformationField translation(const Dims& d, const Vec3& spacing, const std::array<std::int64_t, 3>& s) {
  AffineParams p;
  for (int a = 0; a < 3; ++a) p.translation_mm[a] = static_cast<double>(s[a]) * spacing[a];
  return DeformationField::build(d, d, spacing, p, {});
}

}  // namespace

TEST_CASE("identity field reproduces inputs exactly") {
  const Phantom ph = make_phantom({.dims = {20, 18, 16}});
  const auto field = sample_deformation({20, 18, 16}, {1.0, 1.0, 1.0}, DeformationConfig::none(), 9);
  CHECK(field.is_identity());
  CHECK(warp_labels(ph.subject.labels, field) == ph.subject.labels);
  CHECK(warp_volume(*ph.subject.gt_anat, field) == *ph.subject.gt_anat);
  CHECK(warp_volume(ph.subject.pathology, field) == ph.subject.pathology);
}

TEST_CASE("integer translation equals the index-shift oracle") {
  const Dims d{12, 10, 9};
  const Vec3 spacing{1.0, 2.0, 0.5};
  const Volume v = testing::random_volume(d, 31);
  for (const auto& s : {std::array<std::int64_t, 3>{1, 0, 0}, {-2, 3, 1}, {0, -4, -3}, {5, 5, 5}}) {
    const auto field = translation(d, spacing, s);
    CHECK(warp_volume(v, field) == testing::shift_oracle(v, s));
  }
  // Labels follow the same shift.
  const LabelVolume l = testing::random_labels(d, 2);
  const auto field = translation(d, spacing, {2, -1, 1});
  const LabelVolume w = warp_labels(l, field);
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const bool in = l.grid().contains(i + 2, j - 1, k + 1);
        CHECK(w.labels().at(i, j, k) == (in ? l.labels().at(i + 2, j - 1, k + 1) : 0));
      }
}

TEST_CASE("output grid crops around the centre") {
  const Volume v = testing::random_volume({16, 16, 16}, 4);
  const auto field = DeformationField::build({16, 16, 16}, {8, 10, 16}, {1.0, 1.0, 1.0}, {}, {});
  CHECK(field.offset() == std::array<std::int64_t, 3>{4, 3, 0});
  const Volume w = warp_volume(v, field);
  CHECK(w.dims() == Dims{8, 10, 16});
  for (std::int64_t k = 0; k < 16; ++k)
    for (std::int64_t j = 0; j < 10; ++j)
      for (std::int64_t i = 0; i < 8; ++i) CHECK(w.at(i, j, k) == v.at(i + 4, j + 3, k));
  CHECK(w.grid().affine[0][3] == 4.0);
  CHECK(w.grid().affine[1][3] == 3.0);
}

TEST_CASE("warped probability maps stay in [0,1]") {
  const Phantom ph = make_phantom({.dims = {16, 16, 16}});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto field = sample_deformation({16, 16, 16}, {1.0, 1.0, 1.0}, DeformationConfig{}, seed);
    const ProbVolume w = warp_volume(ph.subject.pathology, field);
    bool ok = true;
    for (float x : w.values().data()) ok &= x >= 0.0f && x <= 1.0f;
    REQUIRE(ok);
  }
}

TEST_CASE("sampled parameters respect their ranges") {
  const DeformationConfig c;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto f = sample_deformation({8, 8, 8}, {1.0, 1.0, 1.0}, c, seed);
    const auto& p = f.affine();
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(p.rotation_deg[a]) <= 15.0);
      CHECK(std::abs(p.scaling[a] - 1.0) <= 0.15);
      CHECK(std::abs(p.shear[a]) <= 0.012);
      CHECK(std::abs(p.translation_mm[a]) <= 5.0);
    }
    REQUIRE(f.control().n == 8);
    for (const auto& d : f.control().displacement_mm) {
      CHECK(std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) <= 10.0 + 1e-12);
    }
  }
}

TEST_CASE("fields are deterministic in the seed") {
  const auto a = sample_deformation({10, 10, 10}, {1.0, 1.0, 1.0}, {}, 5);
  const auto b = sample_deformation({10, 10, 10}, {1.0, 1.0, 1.0}, {}, 5);
  const auto c = sample_deformation({10, 10, 10}, {1.0, 1.0, 1.0}, {}, 6);
  bool same = true, differ = false;
  for (std::size_t n = 0; n < 1000; ++n) {
    same &= a.displacement(n) == b.displacement(n);
    differ |= a.displacement(n) != c.displacement(n);
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("pure rotation about the centre fixes the centre voxel") {
  AffineParams p;
  p.rotation_deg = {0.0, 0.0, 90.0};
  const auto f = DeformationField::build({9, 9, 9}, {9, 9, 9}, {1.0, 1.0, 1.0}, p, {});
  const Vec3 c = f.source_point(4, 4, 4);
  CHECK(c[0] == doctest::Approx(4.0));
  CHECK(c[1] == doctest::Approx(4.0));
  // (1,0) offset from centre maps to (0,1).
  const Vec3 q = f.source_point(5, 4, 4);
  CHECK(q[0] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(q[1] == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("invalid configurations are rejected") {
  DeformationConfig c;
  c.scaling = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.control_points = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.rotation_deg = -1;
  CHECK_THROWS_AS(sample_deformation({4, 4, 4}, {1.0, 1.0, 1.0}, c, 0), std::invalid_argument);
}
