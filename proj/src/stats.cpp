// Copyright 2026 The mempoolq Authors
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

#include "mempoolq/stats.hpp"

#include <algorithm>
#include <cmath>

namespace mempoolq::stats {

double total_variation(std::span<const double> a, std::span<const double> b) {
  std::size_t n = std::max(a.size(), b.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = i < a.size() ? a[i] : 0.0;
    double y = i < b.size() ? b[i] : 0.0;
    total += std::abs(x - y);
  }
  return 0.5 * total;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Moments moments(std::span<const double> values) {
  Moments m;
  m.n = values.size();
  if (m.n == 0) return m;
  m.mean = pairwise_sum(values) / static_cast<double>(m.n);
  if (m.n < 2) return m;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(),
                 [&](double v) { return (v - m.mean) * (v - m.mean); });
  m.variance = pairwise_sum(sq) / static_cast<double>(m.n - 1);
  return m;
}

std::pair<double, double> wilson_interval(double successes, double trials, double z) {
  if (trials <= 0.0) return {0.0, 1.0};
  double phat = successes / trials;
  double z2 = z * z;
  double denom = 1.0 + z2 / trials;
  double center = (phat + z2 / (2.0 * trials)) / denom;
  double half = z * std::sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom;
  // Clamp so the interval always contains the point estimate despite rounding.
  return {std::min(phat, std::max(0.0, center - half)), std::max(phat, std::min(1.0, center + half))};
}

}  // namespace mempoolq::stats
