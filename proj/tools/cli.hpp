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

/// @file cli.hpp
/// @brief Subcommands of the `pathsynth` tool, callable in-process for tests.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pathsynth::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

/// Environment variable holding the default worker count.
inline constexpr const char* kWorkersEnv = "PATHSYNTH_WORKERS";

/// PATHSYNTH_WORKERS if set and positive, else 1.
int default_workers();

struct GenerateArgs {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> config;
  // Flag overrides; unset keeps the config-file value.
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::int64_t> batch_size;
  std::optional<std::int64_t> sample_size;  ///< cube edge, 0 keeps the subject grid
  std::int64_t num_batches = 1;
};

/// Writes <out>/<subject>/<sample_idx>/ directories plus <out>/batches.jsonl
/// and prints one JSON line per batch to `out`.
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);

struct MetricsArgs {
  std::filesystem::path pred;  ///< file, or directory of .nii/.nii.gz files
  std::filesystem::path ref;
  std::vector<std::string> metrics{"l1", "psnr", "ssim"};
  double threshold = 0.5;
  /// Batch description; when set, pred/ref are ignored and one loss record
  /// is printed instead.
  std::optional<std::filesystem::path> loss_batch;
};

/// One JSON record per (prediction, metric). Infinite PSNR is reported as
/// the string "inf".
///
/// Loss mode reads a JSON batch description
///   {"iteration": 0, "alpha": 1, "beta": 1, "lambda": 1.0,
///    "segmenter": "threshold" | "intensity",
///    "samples": [{"pred_anat": p, "pred_pathol": p,
///                 "target_anat": p | null, "target_pathol": p | null}]}
/// with paths relative to the file, and prints the loss report as one JSON
/// line extended with per-modality batch means of l1/psnr/ssim/dice.
int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err);

struct InspectArgs {
  std::filesystem::path sample_dir;
  std::string slice;  ///< "axis:index", empty = middle axial slice
  std::optional<std::filesystem::path> out;
  std::string volume = "image";
};

/// Writes a binary PGM of one slice and prints a metadata summary line.
int cmd_inspect(const InspectArgs& args, std::ostream& out, std::ostream& err);

/// Full argv dispatch.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pathsynth::cli
