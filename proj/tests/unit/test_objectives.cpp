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

#include <atomic>
#include <cmath>

#include <json.hpp>

#include "oracles.hpp"
#include "pathsynth/objectives.hpp"

using namespace pathsynth;
using testing::relative_error;

namespace {

constexpr double kTol = 1e-10;

struct Fixture {
  std::vector<SynthPrediction> preds;
  std::vector<Volume> anat, pathol;
  std::vector<TargetView> views;

  explicit Fixture(std::size_t n, const Dims& d = {16, 16, 16}, std::uint64_t seed = 1) {
    for (std::size_t i = 0; i < n; ++i) {
      preds.push_back({testing::random_volume(d, seed + 10 * i), testing::random_volume(d, seed + 10 * i + 1)});
      anat.push_back(testing::random_volume(d, seed + 10 * i + 2));
      pathol.push_back(testing::random_volume(d, seed + 10 * i + 3));
    }
    for (std::size_t i = 0; i < n; ++i) views.push_back({&anat[i], &pathol[i]});
  }
};

// Constant-valued segmenter that counts calls.
class CountingSegmenter final : public ReferenceSegmenter {
 public:
  ProbVolume segment(const Volume& image) const override {
    ++calls;
    Volume v = image;
    for (float& x : v.storage()) x = std::clamp(x, 0.0f, 1.0f);
    return ProbVolume(std::move(v));
  }
  mutable std::atomic<int> calls{0};
};

}  // namespace

TEST_CASE("spatial gradient is a forward difference") {
  const Volume v = testing::random_volume({6, 5, 4}, 2);
  const auto g = spatial_gradient(v);
  for (int a = 0; a < 3; ++a)
    for (std::int64_t k = 0; k < 4; ++k)
      for (std::int64_t j = 0; j < 5; ++j)
        for (std::int64_t i = 0; i < 6; ++i)
          CHECK(g[a].at(i, j, k) == static_cast<float>(testing::forward_diff(v, i, j, k, a)));
}

TEST_CASE("L1 and gradient terms match the oracles") {
  const Volume a = testing::random_volume({16, 16, 16}, 1), b = testing::random_volume({16, 16, 16}, 2);
  CHECK(relative_error(l1_term(a, b, Reduction::Mean), testing::mean_abs_diff(a, b)) < kTol);
  CHECK(relative_error(gradient_term(a, b, Reduction::Mean), testing::gradient_oracle(a, b)) < kTol);
  CHECK(relative_error(l1_term(a, b, Reduction::Sum), testing::mean_abs_diff(a, b) * 4096) < kTol);
  CHECK(relative_error(gradient_term(a, b, Reduction::Sum), testing::gradient_oracle(a, b) * 3 * 4096) < kTol);
  CHECK(l1_term(a, a, Reduction::Mean) == 0.0);
  CHECK(gradient_term(a, a, Reduction::Mean) == 0.0);
}

TEST_CASE("synthesis loss matches a brute-force sum") {
  Fixture f(3);
  for (double lambda : {1.0, 0.3}) {
    for (int alpha : {0, 1}) {
      for (int beta : {0, 1}) {
        const auto got = synthesis_loss(f.preds, f.views, alpha, beta, {lambda, Reduction::Mean});
        long double anat = 0, pathol = 0;
        for (std::size_t i = 0; i < 3; ++i) {
          anat += testing::mean_abs_diff(f.preds[i].anat, f.anat[i]) +
                  lambda * testing::gradient_oracle(f.preds[i].anat, f.anat[i]);
          pathol += testing::mean_abs_diff(f.preds[i].pathol, f.pathol[i]) +
                    lambda * testing::gradient_oracle(f.preds[i].pathol, f.pathol[i]);
        }
        const long double want = alpha * anat + beta * pathol;
        if (want == 0) {
          CHECK(got.total == 0.0);
        } else {
          CHECK(relative_error(got.total, want) < kTol);
        }
        CHECK(got.anat == doctest::Approx(double(alpha * anat)).epsilon(kTol));
        CHECK(got.pathol == doctest::Approx(double(beta * pathol)).epsilon(kTol));
      }
    }
  }
}

TEST_CASE("inactive modalities are never read") {
  Fixture f(2);
  const auto before = synthesis_loss(f.preds, f.views, 1, 0);
  for (auto& v : f.pathol) v = testing::random_volume({16, 16, 16}, 999);
  for (auto& p : f.preds) p.pathol = testing::random_volume({16, 16, 16}, 998);
  const auto after = synthesis_loss(f.preds, f.views, 1, 0);
  CHECK(before.total == after.total);
  // Missing targets are fine when the flag is off.
  std::vector<TargetView> anat_only{{&f.anat[0], nullptr}, {&f.anat[1], nullptr}};
  CHECK(synthesis_loss(f.preds, anat_only, 1, 0).total == before.total);
  CHECK_THROWS_AS(synthesis_loss(f.preds, anat_only, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(synthesis_loss(f.preds, anat_only, 2, 0), std::invalid_argument);

  CountingSegmenter seg;
  const auto p0 = implicit_pathology_loss(f.preds, anat_only, seg, seg, 1, 0);
  CHECK(p0.seg_pathol == 0.0);
  CHECK(p0.total == p0.seg_anat);
}

TEST_CASE("segmentation loss matches the oracle") {
  const ProbVolume p = testing::random_prob({16, 16, 16}, 3), q = testing::random_prob({16, 16, 16}, 4);
  const SegLoss s = seg_loss(p, q);
  CHECK(relative_error(s.total, testing::seg_oracle(p, q)) < kTol);
  CHECK(s.total == doctest::Approx(0.5 * s.soft_dice + 0.5 * s.bce).epsilon(1e-14));
  // Hard identical masks: dice term 0, BCE from the clamp only.
  Volume m(Grid({4, 4, 4}, {1.0, 1.0, 1.0}), 0.0f);
  for (std::int64_t n = 0; n < 32; ++n) m[n] = 1.0f;
  const SegLoss same = seg_loss(ProbVolume(m), ProbVolume(m));
  CHECK(same.soft_dice == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(same.bce == doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-6));
  CHECK(relative_error(same.total, testing::seg_oracle(ProbVolume(m), ProbVolume(m))) < kTol);
  Volume flipped = m;
  for (float& x : flipped.storage()) x = 1.0f - x;
  CHECK(relative_error(seg_loss(ProbVolume(flipped), ProbVolume(m)).total,
                       testing::seg_oracle(ProbVolume(flipped), ProbVolume(m))) < kTol);
  const SegLoss empty = seg_loss(ProbVolume::zeros(m.grid()), ProbVolume::zeros(m.grid()));
  CHECK(empty.soft_dice == 0.0);
}

TEST_CASE("implicit pathology loss composes segmenter and seg loss") {
  Fixture f(3);
  CountingSegmenter seg;
  const auto got = implicit_pathology_loss(f.preds, f.views, seg, seg, 1, 1);
  long double want = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    want += testing::seg_oracle(seg.segment(f.preds[i].anat), seg.segment(f.anat[i]));
    want += testing::seg_oracle(seg.segment(f.preds[i].pathol), seg.segment(f.pathol[i]));
  }
  CHECK(relative_error(got.total, want) < kTol);

  // Targets shared by every sample are segmented once.
  seg.calls = 0;
  std::vector<TargetView> shared(3, TargetView{&f.anat[0], &f.pathol[0]});
  implicit_pathology_loss(f.preds, shared, seg, seg, 1, 1);
  CHECK(seg.calls == 3 * 2 + 2);
}

TEST_CASE("threshold segmenter flags outliers inside the brain") {
  Volume v(Grid({16, 16, 16}, {1.0, 1.0, 1.0}), 0.0f);
  for (std::int64_t k = 2; k < 14; ++k)
    for (std::int64_t j = 2; j < 14; ++j)
      for (std::int64_t i = 2; i < 14; ++i) v.at(i, j, k) = 0.5f + 0.01f * float((i + j + k) % 3);
  for (std::int64_t k = 6; k < 9; ++k)
    for (std::int64_t j = 6; j < 9; ++j)
      for (std::int64_t i = 6; i < 9; ++i) v.at(i, j, k) = 0.95f;
  const ProbVolume p = ThresholdSegmenter().segment(v);
  CHECK(p.values().at(7, 7, 7) > 0.5f);
  CHECK(p.values().at(3, 3, 12) == 0.0f);
  CHECK(p.values().at(0, 0, 0) == 0.0f);
  CHECK(ThresholdSegmenter().segment(v) == p);
}

TEST_CASE("intensity segmenter clamps to [0,1]") {
  Volume v(Grid({2, 2, 1}, {1.0, 1.0, 1.0}), 0.0f);
  v[0] = -0.5f;
  v[1] = 0.25f;
  v[2] = 1.0f;
  v[3] = 3.0f;
  const ProbVolume p = IntensitySegmenter().segment(v);
  CHECK(p[0] == 0.0f);
  CHECK(p[1] == 0.25f);
  CHECK(p[2] == 1.0f);
  CHECK(p[3] == 1.0f);
}

TEST_CASE("loss weights and schedule") {
  const LossWeights w;
  CHECK(w.lambda == 1.0);
  CHECK(w.omega(0) == 0.1);
  CHECK(w.omega(99999) == 0.1);
  CHECK(w.omega(100000) == 1.0);
  CHECK(total_loss(2.0, 3.0, w, 5) == doctest::Approx(2.3));
  CHECK(total_loss(2.0, 3.0, w, 200000) == 5.0);
}

TEST_CASE("loss report aggregates and serialises") {
  Fixture f(2);
  CountingSegmenter seg;
  const LossWeights w;
  const auto r = evaluate_losses(f.preds, f.views, seg, seg, 1, 1, w, 100000);
  const auto synth = synthesis_loss(f.preds, f.views, 1, 1);
  const auto pl = implicit_pathology_loss(f.preds, f.views, seg, seg, 1, 1);
  CHECK(r.l_synth == synth.total);
  CHECK(r.l_pathol_total == pl.total);
  CHECK(r.omega == 1.0);
  CHECK(r.total == synth.total + pl.total);

  const std::string line = to_json_line(r);
  CHECK(line.find('\n') == std::string::npos);
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("iteration") == 100000);
  CHECK(j.at("total").get<double>() == r.total);
  CHECK(j.at("per_sample").size() == 2);
  CHECK(j.at("per_sample")[1].at("seg_pathol").get<double>() == r.seg_per_sample[1][1]);
}
