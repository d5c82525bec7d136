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

#include <map>

#include "oracles.hpp"
#include "pathsynth/phantom.hpp"
#include "pathsynth/pipeline.hpp"
#include "pathsynth/random.hpp"

using namespace pathsynth;

namespace {

PipelineConfig small_config(std::int64_t n) {
  PipelineConfig c;
  c.sample_dims = {n, n, n};
  return c;
}

}  // namespace

TEST_CASE("samples are deterministic in their seeds") {
  const Phantom ph = make_phantom({.dims = {24, 24, 24}});
  const auto config = small_config(24);
  const GenSample a = generate_sample(ph.subject, 0.6, 1234, config);
  const GenSample b = generate_sample(ph.subject, 0.6, 1234, config);
  const GenSample c = generate_sample(ph.subject, 0.6, 1235, config);
  CHECK(a.image == b.image);
  CHECK(a.labels == b.labels);
  CHECK(a.pathology == b.pathology);
  CHECK(a.draw.delta == b.draw.delta);
  CHECK_FALSE(a.image == c.image);
  CHECK(a.seeds == SampleSeeds::from_master(1234));
  for (float x : a.image.data()) CHECK((x >= 0.0f && x <= 1.0f));
  CHECK(a.alpha == 1);
  CHECK(a.beta == 1);
  CHECK(a.target_anat->grid() == a.image.grid());
}

TEST_CASE("without deformation or corruption the stages compose plainly") {
  const Phantom ph = make_phantom({.dims = {20, 20, 20}});
  auto config = small_config(20);
  config.deformation = DeformationConfig::none();
  const GenSample s = generate_sample(ph.subject, 0.0, 7, config, {true});
  CHECK(s.labels == ph.subject.labels);
  CHECK(s.pathology == ph.subject.pathology);
  CHECK(*s.target_anat == *ph.subject.gt_anat);
  CHECK(s.image == *s.enhanced);
  CHECK(*s.anomaly_free == sample_anomaly_free(s.labels, s.contrast));
  const auto [enh, draw] = enhance_pathology(*s.anomaly_free, s.pathology, s.labels, s.seeds.pathology);
  CHECK(enh == s.image);
  CHECK(draw.delta == s.draw.delta);
}

TEST_CASE("output size crops or pads the subject grid") {
  const Phantom ph = make_phantom({.dims = {16, 16, 16}});
  auto config = small_config(24);
  config.deformation = DeformationConfig::none();
  const GenSample s = generate_sample(ph.subject, 0.0, 1, config);
  CHECK(s.image.dims() == Dims{24, 24, 24});
  CHECK(s.labels.labels().at(0, 0, 0) == 0);
  CHECK(s.labels.labels().at(12, 12, 12) == ph.subject.labels.labels().at(8, 8, 8));
  config.sample_dims = {0, 0, 0};
  CHECK(generate_sample(ph.subject, 0.0, 1, config).image.dims() == Dims{16, 16, 16});
}

TEST_CASE("availability flags follow the subject") {
  const Phantom ph = make_phantom({.dims = {16, 16, 16}, .with_pathol = false});
  const GenSample s = generate_sample(ph.subject, 0.5, 3, small_config(16));
  CHECK(s.alpha == 1);
  CHECK(s.beta == 0);
  CHECK(s.target_anat.has_value());
  CHECK_FALSE(s.target_pathol.has_value());
}

TEST_CASE("stage errors name the stage") {
  Phantom ph = make_phantom({.dims = {12, 12, 12}});
  auto config = small_config(12);
  config.contrast.mean.erase(TissueClass::Other);
  try {
    generate_sample(ph.subject, 0.5, 3, config);
    FAIL("expected throw");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "contrast");
    CHECK(std::string(e.what()).find("stage 'contrast'") == 0);
  }
  CHECK_THROWS_AS(generate_sample(ph.subject, 1.5, 3, small_config(12)), PipelineError);
  ph.subject.gt_anat.reset();
  ph.subject.gt_pathol.reset();
  CHECK_THROWS_AS(generate_sample(ph.subject, 0.5, 3, small_config(12)), PipelineError);
}

TEST_CASE("mild-to-severe severities are stratified and sorted") {
  for (std::int64_t n : {1, 4, 7}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto s = mild_to_severe(n, seed);
      REQUIRE(s.size() == static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) {
        CHECK(s[i] >= double(i) / n);
        CHECK(s[i] <= double(i + 1) / n);
      }
      CHECK(s == mild_to_severe(n, seed));
    }
  }
  CHECK_THROWS(mild_to_severe(0, 1));
}

TEST_CASE("batch plans") {
  const auto plan = plan_batch(4, 10, false);
  const auto shared = plan_batch(4, 10, true);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(plan[i].seeds == SampleSeeds::from_master(mix64(10, Stage::Sample, i)));
    CHECK(shared[i].seeds.deform == shared[0].seeds.deform);
    CHECK(shared[i].seeds.contrast == plan[i].seeds.contrast);
    if (i > 0) CHECK(plan[i].seeds.deform != plan[0].seeds.deform);
  }
  const Phantom ph = make_phantom({.dims = {12, 12, 12}});
  const Batch b = generate_batch(ph.subject, 3, 10, small_config(12));
  CHECK(b.samples.size() == 3);
  CHECK(b.samples[0].severity <= b.samples[2].severity);
}

TEST_CASE("anomaly maps from binary masks prefer the pathology target") {
  const Phantom ph = make_phantom({.dims = {24, 24, 24}});
  Image<std::uint8_t> region(ph.lesion_mask.grid(), 0);
  for (std::int64_t n = 0; n < region.size(); ++n) region[n] = ph.lesion_mask[n] != 0.0f;
  CHECK(ph.subject.pathology ==
        anomaly_probability(*ph.subject.gt_pathol, region, ModalityClass::T2wFlairLike));
  const ProbVolume t1 = prepare_anomaly_map(ph.lesion_mask, ph.subject.gt_anat,
                                            ModalityClass::T1wLike, std::nullopt,
                                            ModalityClass::T2wFlairLike);
  CHECK(t1 == anomaly_probability(*ph.subject.gt_anat, region, ModalityClass::T1wLike));
  const Volume soft = testing::random_volume({24, 24, 24}, 3);
  CHECK(prepare_anomaly_map(soft, ph.subject.gt_anat, ModalityClass::T1wLike, ph.subject.gt_pathol,
                            ModalityClass::T2wFlairLike)
            .values() == soft);
}

TEST_CASE("contrast specs stay inside the prior") {
  const auto table = make_phantom({.dims = {8, 8, 8}}).subject.labels.table();
  const auto prior = ContrastPrior::defaults();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spec = draw_contrast_spec(table, prior, seed);
    for (const auto& [id, g] : spec.per_label) {
      if (id == 0) {
        CHECK(g.mean == 0.0);
        CHECK(g.stddev == 0.0);
        continue;
      }
      CHECK(g.mean >= 0.05);
      CHECK(g.mean <= 0.95);
      CHECK(g.stddev >= 0.01);
      CHECK(g.stddev <= 0.06);
    }
  }
}

TEST_CASE("co-training schedule honours dataset weights") {
  const std::vector<std::string> tags{"atlas", "atlas", "isles", "adni3"};
  CotrainingSchedule s(tags, {{"atlas", 2.0}, {"isles", 0.0}}, 5);
  std::map<std::size_t, int> subj;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    const auto step = s.next();
    CHECK(step.index == static_cast<std::uint64_t>(i));
    if (i < 3) CHECK(step.batch_seed == mix64(5, Stage::Batch, i));
    ++subj[step.subject];
  }
  CHECK(subj[2] == 0);
  // atlas : adni3 = 2 : 1, atlas split evenly across its two subjects.
  CHECK(double(subj[0] + subj[1]) / n == doctest::Approx(2.0 / 3).epsilon(0.03));
  CHECK(double(subj[0]) / (subj[0] + subj[1]) == doctest::Approx(0.5).epsilon(0.05));

  CotrainingSchedule a(tags, {}, 9), b(tags, {}, 9);
  for (int i = 0; i < 20; ++i) CHECK(a.next().subject == b.next().subject);
  CHECK_THROWS(CotrainingSchedule(tags, {{"atlas", 0}, {"isles", 0}, {"adni3", 0}}, 1));
  CHECK_THROWS(CotrainingSchedule(tags, {{"atlas", -1}}, 1));
  CHECK_THROWS(CotrainingSchedule({}, {}, 1));
}

TEST_CASE("co-training iterator yields full batches") {
  PhantomOptions o{.dims = {12, 12, 12}};
  std::vector<std::shared_ptr<const LabeledSubject>> subjects;
  o.id = "a";
  o.dataset = "atlas";
  o.with_pathol = false;
  subjects.push_back(std::make_shared<LabeledSubject>(make_phantom(o).subject));
  o.id = "b";
  o.dataset = "isles";
  o.with_pathol = true;
  o.with_anat = false;
  subjects.push_back(std::make_shared<LabeledSubject>(make_phantom(o).subject));
  CotrainingIterator it(subjects, {}, 3, small_config(12), 4);
  for (int i = 0; i < 4; ++i) {
    const Batch b = it.next();
    CHECK(b.samples.size() == 4);
    const auto& s = b.samples[0];
    CHECK(s.alpha + s.beta == 1);
    CHECK((s.dataset_tag == "atlas") == (s.alpha == 1));
  }
}
