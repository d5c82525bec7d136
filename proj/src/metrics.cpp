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

#include "pathsynth/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pathsynth {

namespace {

void require_same_dims(const Volume& a, const Volume& b, const char* what) {
  if (a.dims() != b.dims()) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

// Dense double array with explicit dims, used for the SSIM filter passes.
struct Field {
  Dims dims;
  std::vector<double> data;
  double& at(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data[static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k))];
  }
  double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data[static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k))];
  }
};

// Valid-mode correlation with a 1D kernel along one axis.
Field filter_valid(const Field& in, const std::vector<double>& kernel, int axis) {
  const auto w = static_cast<std::int64_t>(kernel.size());
  Field out;
  out.dims = in.dims;
  out.dims[axis] = in.dims[axis] - w + 1;
  out.data.assign(static_cast<std::size_t>(out.dims[0] * out.dims[1] * out.dims[2]), 0.0);
  for (std::int64_t k = 0; k < out.dims[2]; ++k) {
    for (std::int64_t j = 0; j < out.dims[1]; ++j) {
      for (std::int64_t i = 0; i < out.dims[0]; ++i) {
        double acc = 0.0;
        for (std::int64_t t = 0; t < w; ++t) {
          const std::int64_t ii = axis == 0 ? i + t : i;
          const std::int64_t jj = axis == 1 ? j + t : j;
          const std::int64_t kk = axis == 2 ? k + t : k;
          acc += kernel[static_cast<std::size_t>(t)] * in.at(ii, jj, kk);
        }
        out.at(i, j, k) = acc;
      }
    }
  }
  return out;
}

Field filter3(const Field& in, const std::vector<double>& kernel) {
  return filter_valid(filter_valid(filter_valid(in, kernel, 0), kernel, 1), kernel, 2);
}

}  // namespace

double metric_l1(const Volume& a, const Volume& b) {
  require_same_dims(a, b, "metric_l1");
  double sum = 0.0;
  for (std::int64_t n = 0; n < a.size(); ++n) {
    sum += std::abs(static_cast<double>(a[n]) - static_cast<double>(b[n]));
  }
  return sum / static_cast<double>(a.size());
}

double metric_mse(const Volume& a, const Volume& b) {
  require_same_dims(a, b, "metric_mse");
  double sum = 0.0;
  for (std::int64_t n = 0; n < a.size(); ++n) {
    const double d = static_cast<double>(a[n]) - static_cast<double>(b[n]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr_from_mse(double mse, double max_value) {
  if (mse < 0.0) throw std::invalid_argument("mse must be >= 0");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / mse);
}

double metric_psnr(const Volume& a, const Volume& b, double max_value) {
  return psnr_from_mse(metric_mse(a, b), max_value);
}

double metric_ssim(const Volume& a, const Volume& b, const SsimOptions& options) {
  require_same_dims(a, b, "metric_ssim");
  const int w = options.window;
  if (w < 1 || w % 2 == 0) throw std::invalid_argument("ssim window must be odd and positive");
  for (auto d : a.dims()) {
    if (d < w) throw std::invalid_argument("ssim: volume smaller than the window");
  }

  std::vector<double> kernel(static_cast<std::size_t>(w));
  const int r = w / 2;
  double ksum = 0.0;
  for (int t = -r; t <= r; ++t) {
    kernel[t + r] = std::exp(-0.5 * t * t / (options.sigma * options.sigma));
    ksum += kernel[t + r];
  }
  for (double& x : kernel) x /= ksum;

  const auto n = static_cast<std::size_t>(a.size());
  Field x{a.dims(), std::vector<double>(n)};
  Field y{a.dims(), std::vector<double>(n)};
  Field xx{a.dims(), std::vector<double>(n)};
  Field yy{a.dims(), std::vector<double>(n)};
  Field xy{a.dims(), std::vector<double>(n)};
  for (std::size_t m = 0; m < n; ++m) {
    const double p = a[m];
    const double q = b[m];
    x.data[m] = p;
    y.data[m] = q;
    xx.data[m] = p * p;
    yy.data[m] = q * q;
    xy.data[m] = p * q;
  }
  const Field mx = filter3(x, kernel);
  const Field my = filter3(y, kernel);
  const Field mxx = filter3(xx, kernel);
  const Field myy = filter3(yy, kernel);
  const Field mxy = filter3(xy, kernel);

  const double c1 = std::pow(options.k1 * options.data_range, 2);
  const double c2 = std::pow(options.k2 * options.data_range, 2);
  double sum = 0.0;
  for (std::size_t m = 0; m < mx.data.size(); ++m) {
    const double ux = mx.data[m];
    const double uy = my.data[m];
    const double vx = mxx.data[m] - ux * ux;
    const double vy = myy.data[m] - uy * uy;
    const double cxy = mxy.data[m] - ux * uy;
    sum += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return sum / static_cast<double>(mx.data.size());
}

double metric_dice(const Volume& a, const Volume& b, double threshold) {
  require_same_dims(a, b, "metric_dice");
  std::int64_t na = 0;
  std::int64_t nb = 0;
  std::int64_t both = 0;
  for (std::int64_t n = 0; n < a.size(); ++n) {
    const bool pa = a[n] >= threshold;
    const bool pb = b[n] >= threshold;
    na += pa;
    nb += pb;
    both += pa && pb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

}  // namespace pathsynth
