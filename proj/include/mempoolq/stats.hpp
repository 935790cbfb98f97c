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

#pragma once

#include <span>
#include <utility>
#include <vector>

namespace mempoolq::stats {

/// Total-variation distance between two pmfs; missing entries count as 0.
double total_variation(std::span<const double> a, std::span<const double> b);

/// Pairwise (cascade) summation. Result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  std::size_t n = 0;
};

/// Two-pass mean and variance with pairwise summation.
Moments moments(std::span<const double> values);

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
std::pair<double, double> wilson_interval(double successes, double trials, double z = 1.959963984540054);

}  // namespace mempoolq::stats
