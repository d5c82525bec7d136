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

// Test-side reference implementations. These are deliberately naive: scalar
// loops, long double accumulation, no shared code with the library kernels.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "pathsynth/pathology.hpp"
#include "pathsynth/volume.hpp"

namespace pathsynth::testing {

// Independent hash so fixtures can be rebuilt outside C++ (numpy/skimage).
inline std::uint64_t hash64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform [0,1) from (seed, n).
inline double hash_unit(std::uint64_t seed, std::uint64_t n) {
  return static_cast<double>(hash64(seed + 0x9E3779B97F4A7C15ULL * (n + 1)) >> 11) * 0x1.0p-53;
}

inline Volume random_volume(const Dims& d, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Volume v(Grid(d, {1.0, 1.0, 1.0}));
  for (std::size_t n = 0; n < v.storage().size(); ++n) {
    v[n] = static_cast<float>(lo + (hi - lo) * hash_unit(seed, n));
  }
  return v;
}

inline ProbVolume random_prob(const Dims& d, std::uint64_t seed) {
  return ProbVolume(random_volume(d, seed));
}

/// The fixed SSIM fixture: b = clamp(0.7 a + 0.3 u) in float32.
inline std::pair<Volume, Volume> ssim_fixture(std::int64_t n) {
  Volume a(Grid({n, n, n}, {1.0, 1.0, 1.0}));
  Volume b = a;
  for (std::size_t i = 0; i < a.storage().size(); ++i) {
    a[i] = static_cast<float>(hash_unit(1, i));
    const float u = static_cast<float>(hash_unit(2, i));
    b[i] = std::clamp(0.7f * a[i] + 0.3f * u, 0.0f, 1.0f);
  }
  return {a, b};
}
/// skimage 0.25.2 structural_similarity(gaussian_weights=True, sigma=1.5,
/// use_sample_covariance=False, data_range=1) on ssim_fixture(24), arrays
/// reshaped (z, y, x) and promoted to float64.
inline constexpr double kSsimFixtureReference = 0.8876951615247691;

// ---- anomaly probability ----------------------------------------------------

/// Per-voxel map given the region extrema, computed in double.
inline float anomaly_oracle(float value, float lo, float hi, bool inside, ModalityClass m) {
  if (!inside) return 0.0f;
  if (hi == lo) return 1.0f;
  const double t = (static_cast<double>(value) - lo) / (static_cast<double>(hi) - lo);
  return static_cast<float>(m == ModalityClass::T1wLike ? 1.0 - t : t);
}

// ---- warping ----------------------------------------------------------------

/// out(x) = in(x + shift), zero outside.
inline Volume shift_oracle(const Volume& in, const std::array<std::int64_t, 3>& shift) {
  Volume out(in.grid(), 0.0f);
  const Dims d = in.dims();
  for (std::int64_t k = 0; k < d[2]; ++k) {
    for (std::int64_t j = 0; j < d[1]; ++j) {
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const std::int64_t a = i + shift[0], b = j + shift[1], c = k + shift[2];
        if (in.grid().contains(a, b, c)) out.at(i, j, k) = in.at(a, b, c);
      }
    }
  }
  return out;
}

// ---- losses -----------------------------------------------------------------

inline long double mean_abs_diff(const Volume& a, const Volume& b) {
  long double s = 0.0L;
  for (std::size_t n = 0; n < a.storage().size(); ++n) {
    s += std::fabs(static_cast<long double>(a[n]) - static_cast<long double>(b[n]));
  }
  return s / static_cast<long double>(a.storage().size());
}

/// Forward difference along `axis`, 0 at the last index.
inline long double forward_diff(const Volume& v, std::int64_t i, std::int64_t j, std::int64_t k,
                                int axis) {
  std::array<std::int64_t, 3> p{i, j, k};
  if (p[axis] + 1 >= v.dims()[axis]) return 0.0L;
  std::array<std::int64_t, 3> q = p;
  q[axis] += 1;
  return static_cast<long double>(v.at(q[0], q[1], q[2])) -
         static_cast<long double>(v.at(p[0], p[1], p[2]));
}

/// Mean over voxels and axes of |grad a - grad b|.
inline long double gradient_oracle(const Volume& a, const Volume& b) {
  const Dims d = a.dims();
  long double s = 0.0L;
  for (int axis = 0; axis < 3; ++axis) {
    for (std::int64_t k = 0; k < d[2]; ++k) {
      for (std::int64_t j = 0; j < d[1]; ++j) {
        for (std::int64_t i = 0; i < d[0]; ++i) {
          s += std::fabs(forward_diff(a, i, j, k, axis) - forward_diff(b, i, j, k, axis));
        }
      }
    }
  }
  return s / (3.0L * static_cast<long double>(a.storage().size()));
}

inline long double seg_oracle(const ProbVolume& p, const ProbVolume& q, long double eps = 1e-6L,
                              long double clamp = 1e-7L) {
  long double inter = 0.0L, sp = 0.0L, sq = 0.0L, bce = 0.0L;
  const auto n = static_cast<std::size_t>(p.size());
  for (std::size_t i = 0; i < n; ++i) {
    const long double a = p[i], b = q[i];
    inter += a * b;
    sp += a;
    sq += b;
    const long double c = std::clamp(a, clamp, 1.0L - clamp);
    bce += -(b * std::log(c) + (1.0L - b) * std::log(1.0L - c));
  }
  const long double dice = 1.0L - (2.0L * inter + eps) / (sp + sq + eps);
  return 0.5L * dice + 0.5L * bce / static_cast<long double>(n);
}

// ---- metrics ----------------------------------------------------------------

/// Direct 3D windowed SSIM, no separability.
inline long double ssim_oracle(const Volume& x, const Volume& y, int win = 11, double sigma = 1.5) {
  const int r = win / 2;
  std::vector<long double> w(static_cast<std::size_t>(win * win * win));
  long double wsum = 0.0L;
  for (int c = -r; c <= r; ++c) {
    for (int b = -r; b <= r; ++b) {
      for (int a = -r; a <= r; ++a) {
        const long double v = std::exp(-static_cast<long double>(a * a + b * b + c * c) /
                                       (2.0L * sigma * sigma));
        w[static_cast<std::size_t>((c + r) * win * win + (b + r) * win + (a + r))] = v;
        wsum += v;
      }
    }
  }
  for (auto& v : w) v /= wsum;
  const long double c1 = 0.01L * 0.01L, c2 = 0.03L * 0.03L;
  const Dims d = x.dims();
  long double total = 0.0L;
  std::int64_t count = 0;
  for (std::int64_t k = r; k < d[2] - r; ++k) {
    for (std::int64_t j = r; j < d[1] - r; ++j) {
      for (std::int64_t i = r; i < d[0] - r; ++i) {
        long double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
        for (int c = -r; c <= r; ++c) {
          for (int b = -r; b <= r; ++b) {
            for (int a = -r; a <= r; ++a) {
              const long double ww =
                  w[static_cast<std::size_t>((c + r) * win * win + (b + r) * win + (a + r))];
              const long double u = x.at(i + a, j + b, k + c), v = y.at(i + a, j + b, k + c);
              mx += ww * u;
              my += ww * v;
              xx += ww * u * u;
              yy += ww * v * v;
              xy += ww * u * v;
            }
          }
        }
        const long double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  return total / static_cast<long double>(count);
}

inline long double relative_error(long double got, long double want) {
  const long double scale = std::max(std::fabs(want), 1e-300L);
  return std::fabs(got - want) / scale;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pathsynth_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Byte-wise comparison of two directory trees.
bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b,
                     std::string* first_difference = nullptr);

/// Fixed-seed integer labels with the aseg IDs the phantom uses.
LabelVolume random_labels(const Dims& d, std::uint64_t seed);

}  // namespace pathsynth::testing
