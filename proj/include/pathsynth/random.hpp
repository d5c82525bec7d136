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

/// @file random.hpp
/// @brief Portable seeded random streams and the seed-splitting rule.
///
/// The standard library distributions are implementation-defined, so the
/// generator uses its own uniform and normal transforms on top of
/// xoshiro256**. Integer streams are bit-identical everywhere; normals also
/// depend on the platform libm (log, sin, cos).

#pragma once

#include <cstdint>

namespace pathsynth {

/// splitmix64 output finalizer.
constexpr std::uint64_t fmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child seed for (stage, index) under a master seed:
///   h = fmix64(master + 0x9E3779B97F4A7C15 * (stage + 1))
///   child = fmix64(h ^ (0xD1B54A32D192ED03 * (index + 1)))
constexpr std::uint64_t mix64(std::uint64_t master, std::uint64_t stage, std::uint64_t index) {
  const std::uint64_t h = fmix64(master + 0x9E3779B97F4A7C15ULL * (stage + 1));
  return fmix64(h ^ (0xD1B54A32D192ED03ULL * (index + 1)));
}

/// Stage tags used with mix64. Values are part of the on-disk contract.
enum class Stage : std::uint64_t {
  Deformation = 1,
  Contrast = 2,
  Pathology = 3,
  Corruption = 4,
  Severity = 5,
  Sample = 6,
  Iterator = 7,
  Batch = 8,
};

constexpr std::uint64_t mix64(std::uint64_t master, Stage stage, std::uint64_t index = 0) {
  return mix64(master, static_cast<std::uint64_t>(stage), index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0,1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Box-Muller; pairs are cached so each call consumes a fixed amount of state.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace pathsynth
