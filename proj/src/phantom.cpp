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

#include "pathsynth/phantom.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pathsynth/dataset.hpp"
#include "pathsynth/nifti.hpp"

namespace pathsynth {

Phantom make_phantom(const PhantomOptions& options) {
  const Grid grid(options.dims, options.spacing);
  Image<std::int32_t> ids(grid, 0);
  Volume lesion(grid, 0.0f);
  Volume t1(grid, 0.0f);
  Volume flair(grid, 0.0f);

  Vec3 centre;
  Vec3 semi;
  for (int a = 0; a < 3; ++a) {
    centre[a] = 0.5 * static_cast<double>(options.dims[a] - 1);
    semi[a] = 0.42 * static_cast<double>(options.dims[a]);
  }
  const double lesion_radius =
      0.12 * static_cast<double>(std::min({options.dims[0], options.dims[1], options.dims[2]}));
  const Vec3 lesion_centre{centre[0] + 0.45 * semi[0], centre[1], centre[2] + 0.1 * semi[2]};
  const Vec3 deep_centre{centre[0] - 0.35 * semi[0], centre[1] + 0.2 * semi[1], centre[2]};

  for (std::int64_t k = 0; k < options.dims[2]; ++k) {
    for (std::int64_t j = 0; j < options.dims[1]; ++j) {
      for (std::int64_t i = 0; i < options.dims[0]; ++i) {
        const Vec3 p{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
        double r2 = 0.0;
        double deep2 = 0.0;
        double les2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          r2 += std::pow((p[a] - centre[a]) / semi[a], 2);
          deep2 += std::pow((p[a] - deep_centre[a]) / (0.15 * semi[a]), 2);
          les2 += std::pow(p[a] - lesion_centre[a], 2);
        }
        const double r = std::sqrt(r2);
        const bool right = p[0] > centre[0];
        std::int32_t id = 0;
        if (r > 1.0) {
          id = 0;
        } else if (r > 0.9) {
          id = 24;
        } else if (r > 0.75) {
          id = right ? 42 : 3;
        } else if (r > 0.2) {
          id = deep2 <= 1.0 ? 10 : (right ? 41 : 2);
        } else {
          id = 4;
        }
        ids.at(i, j, k) = id;

        float a = 0.0f;
        float f = 0.0f;
        switch (id) {
          case 2: case 41: a = 0.80f; f = 0.45f; break;
          case 3: case 42: a = 0.55f; f = 0.58f; break;
          case 4: case 24: a = 0.15f; f = 0.08f; break;
          case 10: a = 0.65f; f = 0.50f; break;
          default: break;
        }
        const double d = std::sqrt(les2) / lesion_radius;
        if (d <= 1.0 && (id == 2 || id == 41)) {
          lesion.at(i, j, k) = 1.0f;
          // Lesion core is darkest on T1 and brightest on FLAIR.
          a = static_cast<float>(0.30 + 0.30 * d);
          f = static_cast<float>(0.95 - 0.30 * d);
        }
        t1.at(i, j, k) = a;
        flair.at(i, j, k) = f;
      }
    }
  }

  Phantom out;
  out.subject.id = options.id;
  out.subject.dataset_tag = options.dataset;
  LabelTable table{{0, TissueClass::Background}, {2, TissueClass::WhiteMatter},
                   {41, TissueClass::WhiteMatter}, {3, TissueClass::GrayMatter},
                   {42, TissueClass::GrayMatter}, {4, TissueClass::Csf},
                   {24, TissueClass::Csf},         {10, TissueClass::Other}};
  out.subject.labels = LabelVolume(std::move(ids), std::move(table));
  if (options.with_anat) out.subject.gt_anat = t1;
  if (options.with_pathol) out.subject.gt_pathol = flair;
  out.subject.pathology =
      prepare_anomaly_map(lesion, out.subject.gt_anat, ModalityClass::T1wLike,
                          out.subject.gt_pathol, ModalityClass::T2wFlairLike);
  out.lesion_mask = std::move(lesion);
  return out;
}

std::filesystem::path write_phantom_dataset(const std::filesystem::path& dir,
                                            const PhantomOptions& options) {
  const Phantom ph = make_phantom(options);
  const std::filesystem::path sub = dir / options.id;
  std::filesystem::create_directories(sub);
  write_nifti(ph.subject.labels, sub / "labels.nii.gz", NiftiDatatype::Int16);
  write_nifti(ph.lesion_mask, sub / "lesion.nii.gz", NiftiDatatype::UInt8);

  nlohmann::json s = {{"id", options.id},
                      {"dataset", options.dataset},
                      {"labels", options.id + "/labels.nii.gz"},
                      {"pathology", options.id + "/lesion.nii.gz"}};
  if (ph.subject.gt_anat) {
    write_nifti(*ph.subject.gt_anat, sub / "t1.nii.gz");
    s["gt_anat"] = {{"path", options.id + "/t1.nii.gz"}, {"modality", "t1w"}};
  }
  if (ph.subject.gt_pathol) {
    write_nifti(*ph.subject.gt_pathol, sub / "flair.nii.gz");
    s["gt_pathol"] = {{"path", options.id + "/flair.nii.gz"}, {"modality", "flair"}};
  }
  nlohmann::json table = nlohmann::json::object();
  for (const auto& [id, cls] : ph.subject.labels.table()) table[std::to_string(id)] = to_string(cls);
  const nlohmann::json manifest = {{"schema_version", kManifestSchemaVersion},
                                   {"label_table", table},
                                   {"subjects", nlohmann::json::array({s})}};
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return path;
}

}  // namespace pathsynth
