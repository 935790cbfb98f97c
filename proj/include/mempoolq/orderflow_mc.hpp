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

#include <cstdint>
#include <utility>
#include <vector>

#include "mempoolq/cfmm.hpp"
#include "mempoolq/random.hpp"

namespace mempoolq::mc {

/// Law of a zero-intelligence signed order size X (A units; positive buys).
class OrderSizeLaw {
 public:
  enum class Kind { uniform_symmetric, empirical };

  /// Uniform direction, size uniform on (0, L]. Mean 0, variance L^2 / 3.
  static OrderSizeLaw uniform_symmetric(double max_size);
  /// Resamples the given signed sizes uniformly.
  static OrderSizeLaw empirical(std::vector<double> sizes);

  Kind kind() const noexcept { return kind_; }
  double max_size() const noexcept { return max_size_; }
  const std::vector<double>& sizes() const noexcept { return sizes_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }

  double sample(Rng& rng) const;
  /// Same law with every size multiplied by c > 0.
  OrderSizeLaw scaled(double c) const;

 private:
  OrderSizeLaw() = default;
  Kind kind_ = Kind::uniform_symmetric;
  double max_size_ = 0.0;
  std::vector<double> sizes_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

std::vector<double> sample_zi_flow(const OrderSizeLaw& law, std::size_t n, Rng& rng);

/// (E(K) E(X), Var(K) E(X)^2 + E(K) Var(X)): shift and variance of the A reserve
/// after K i.i.d. orders.
std::pair<double, double> reserve_moments_wald(double mean_k, double var_k,
                                               const OrderSizeLaw& law);

/// Mean and variance of the A reserve when K is geometric with failure
/// probability p, starting from phi_a0.
std::pair<double, double> geometric_reserve_moments(double p, const OrderSizeLaw& law,
                                                    double phi_a0);

/// Distribution of the number K of orders executed ahead of the tagged order.
class KModel {
 public:
  enum class Kind { zero, geometric, table };

  static KModel zero();
  /// P(K = k) = (1 - p) p^k.
  static KModel geometric(double p);
  /// Geometric with p the root for the priority queue (lambda_high, mu, beta).
  static KModel priority(double lambda_high, double mu, int beta);
  /// P(K = k) = probs[k]; must sum to 1 within 1e-9.
  static KModel table(std::vector<double> probs);

  Kind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  double mean() const;
  double variance() const;
  std::uint64_t sample(Rng& rng) const;

 private:
  KModel() = default;
  Kind kind_ = Kind::zero;
  double p_ = 0.0;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

/// One replication: K prefix orders, then the tagged order.
struct McSample {
  std::uint64_t k = 0;
  double reserve_a = 0.0;  // A reserve seen by the tagged order
  double price = 0.0;      // |B delta| / |A amount| of the tagged order
  bool rejected = false;   // some order left the pool domain
};

/// Chebyshev band mean (1 +- k cv); P(outside) <= 1/k^2.
struct ChebyshevBand {
  double k = 0.0;
  double half_width = 0.0;  // k cv, relative
  double prob_bound = 0.0;  // 1 / k^2
  double lower = 0.0;
  double upper = 0.0;
  double freq_outside_band = 0.0;  // empirical P(|price / mean - 1| >= k cv)
  double freq_vs_forecast = 0.0;   // empirical P(|price / forecast - 1| >= k cv)
};

struct McReport {
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::size_t n_accepted = 0;
  std::size_t n_rejected = 0;
  double rejected_fraction = 0.0;
  double forecast_price = 0.0;  // price of the order on the unperturbed pool
  double mean_price = 0.0;
  double var_price = 0.0;
  double cv_price = 0.0;
  double mean_reserve_a = 0.0;
  double var_reserve_a = 0.0;
  double mean_k = 0.0;
  std::vector<ChebyshevBand> bands;
  std::vector<McSample> samples;  // empty unless requested
};

struct McOptions {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  std::vector<double> chebyshev_k{2.0, 3.0};
  bool keep_samples = false;
  int threads = 1;
};

/// (k cv, 1 / k^2).
std::pair<double, double> chebyshev_guarantee(double cv, double k);

/// Replication r uses make_rng(seed, r): K, then K order sizes applied to the
/// pool, then the tagged order. Replications where an order leaves the pool
/// domain are rejected and counted. Moments use pairwise summation in
/// replication order, so the report does not depend on the thread count.
McReport mc_execution_price(const cfmm::CfmmState& pool, const OrderSizeLaw& law,
                            const KModel& k_model, const cfmm::MarketOrder& order,
                            const McOptions& options);

/// Serial reference for mc_execution_price.
McReport mc_execution_price_serial(const cfmm::CfmmState& pool, const OrderSizeLaw& law,
                                   const KModel& k_model, const cfmm::MarketOrder& order,
                                   const McOptions& options);

}  // namespace mempoolq::mc
