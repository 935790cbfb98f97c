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

#include "mempoolq/orderflow_mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "mempoolq/error.hpp"
#include "mempoolq/priority_analytics.hpp"
#include "mempoolq/stats.hpp"

namespace mempoolq::mc {

// ---------------------------------------------------------------------------
// Order sizes

OrderSizeLaw OrderSizeLaw::uniform_symmetric(double max_size) {
  if (!(max_size > 0.0) || !std::isfinite(max_size)) {
    throw validation_error("uniform order size bound must be finite and > 0");
  }
  OrderSizeLaw law;
  law.kind_ = Kind::uniform_symmetric;
  law.max_size_ = max_size;
  law.mean_ = 0.0;
  law.variance_ = max_size * max_size / 3.0;
  return law;
}

OrderSizeLaw OrderSizeLaw::empirical(std::vector<double> sizes) {
  if (sizes.empty()) throw validation_error("empirical order size law needs at least one size");
  for (double s : sizes) {
    if (!std::isfinite(s) || s == 0.0) throw validation_error("empirical order sizes must be finite and non-zero");
  }
  OrderSizeLaw law;
  law.kind_ = Kind::empirical;
  law.sizes_ = std::move(sizes);
  auto m = stats::moments(law.sizes_);
  law.mean_ = m.mean;
  // Population variance: the law is the empirical distribution itself.
  law.variance_ = m.n > 1 ? m.variance * static_cast<double>(m.n - 1) / static_cast<double>(m.n) : 0.0;
  for (double s : law.sizes_) law.max_size_ = std::max(law.max_size_, std::abs(s));
  return law;
}

double OrderSizeLaw::sample(Rng& rng) const {
  if (kind_ == Kind::uniform_symmetric) {
    double direction = uniform01(rng) < 0.5 ? 1.0 : -1.0;
    return direction * max_size_ * (1.0 - uniform01(rng));
  }
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(sizes_.size()));
  return sizes_[std::min(i, sizes_.size() - 1)];
}

OrderSizeLaw OrderSizeLaw::scaled(double c) const {
  if (!(c > 0.0)) throw validation_error("scale factor must be > 0");
  if (kind_ == Kind::uniform_symmetric) return uniform_symmetric(c * max_size_);
  std::vector<double> s = sizes_;
  for (double& v : s) v *= c;
  return empirical(std::move(s));
}

std::vector<double> sample_zi_flow(const OrderSizeLaw& law, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& x : out) x = law.sample(rng);
  return out;
}

// ---------------------------------------------------------------------------
// Analytic reserve moments

std::pair<double, double> reserve_moments_wald(double mean_k, double var_k,
                                               const OrderSizeLaw& law) {
  if (!std::isfinite(mean_k) || !std::isfinite(var_k) || mean_k < 0.0 || var_k < 0.0) {
    throw validation_error("moments of K must be finite and non-negative");
  }
  double ex = law.mean();
  return {mean_k * ex, var_k * ex * ex + mean_k * law.variance()};
}

std::pair<double, double> geometric_reserve_moments(double p, const OrderSizeLaw& law,
                                                    double phi_a0) {
  if (!(p >= 0.0 && p < 1.0)) throw validation_error("geometric p must lie in [0, 1)");
  auto [shift, var] = reserve_moments_wald(p / (1.0 - p), p / ((1.0 - p) * (1.0 - p)), law);
  return {phi_a0 + shift, var};
}

// ---------------------------------------------------------------------------
// K models

KModel KModel::zero() { return KModel{}; }

KModel KModel::geometric(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw validation_error("geometric p must lie in [0, 1)");
  KModel m;
  m.kind_ = p == 0.0 ? Kind::zero : Kind::geometric;
  m.p_ = p;
  return m;
}

KModel KModel::priority(double lambda_high, double mu, int beta) {
  return geometric(analytics::solve_chi_root(lambda_high, mu, beta));
}

KModel KModel::table(std::vector<double> probs) {
  if (probs.empty()) throw validation_error("K table must be non-empty");
  double total = 0.0;
  for (double v : probs) {
    if (!(v >= 0.0 && v <= 1.0)) throw validation_error("K table entries must lie in [0, 1]");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw validation_error("K table must sum to 1");
  KModel m;
  m.kind_ = Kind::table;
  m.probs_ = std::move(probs);
  m.cdf_.resize(m.probs_.size());
  double c = 0.0;
  for (std::size_t i = 0; i < m.probs_.size(); ++i) m.cdf_[i] = (c += m.probs_[i]);
  m.cdf_.back() = std::numeric_limits<double>::infinity();
  return m;
}

double KModel::mean() const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::geometric: return p_ / (1.0 - p_);
    case Kind::table: {
      double s = 0.0;
      for (std::size_t k = 0; k < probs_.size(); ++k) s += static_cast<double>(k) * probs_[k];
      return s;
    }
  }
  return 0.0;
}

double KModel::variance() const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::geometric: return p_ / ((1.0 - p_) * (1.0 - p_));
    case Kind::table: {
      double m = mean();
      double s = 0.0;
      for (std::size_t k = 0; k < probs_.size(); ++k) {
        double d = static_cast<double>(k) - m;
        s += d * d * probs_[k];
      }
      return s;
    }
  }
  return 0.0;
}

std::uint64_t KModel::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::zero: return 0;
    case Kind::geometric: {
      // Inversion: P(K >= k) = p^k.
      double u = 1.0 - uniform01(rng);
      return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(p_)));
    }
    case Kind::table: {
      double u = uniform01(rng);
      auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      return static_cast<std::uint64_t>(it - cdf_.begin());
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Monte Carlo

std::pair<double, double> chebyshev_guarantee(double cv, double k) {
  if (!(cv >= 0.0)) throw validation_error("coefficient of variation must be >= 0");
  if (!(k > 0.0)) throw validation_error("Chebyshev k must be > 0");
  return {k * cv, 1.0 / (k * k)};
}

namespace {

McSample replicate(const cfmm::CfmmState& pool, const OrderSizeLaw& law, const KModel& k_model,
                   const cfmm::MarketOrder& order, std::uint64_t seed, std::uint64_t r) {
  Rng rng = make_rng(seed, r);
  McSample s;
  s.k = k_model.sample(rng);
  cfmm::CfmmState state = pool;
  for (std::uint64_t i = 0; i < s.k; ++i) {
    cfmm::MarketOrder x{law.sample(rng)};
    // Keep drawing after a rejection so stream use does not depend on it.
    if (s.rejected) continue;
    if (cfmm::order_fits(state, x)) {
      state = cfmm::apply_order(state, x);
    } else {
      s.rejected = true;
    }
  }
  s.reserve_a = state.reserve_a();
  if (!s.rejected && cfmm::order_fits(state, order)) {
    s.price = cfmm::execution_price(state, order);
  } else {
    s.rejected = true;
  }
  return s;
}

void check_inputs(const cfmm::MarketOrder& order, const McOptions& options) {
  if (options.n_samples < 2) throw validation_error("n_samples must be >= 2");
  if (order.signed_amount == 0.0 || !std::isfinite(order.signed_amount)) {
    throw validation_error("tagged order amount must be finite and non-zero");
  }
  for (double k : options.chebyshev_k) {
    if (!(k > 0.0)) throw validation_error("Chebyshev k must be > 0");
  }
}

McReport summarize(const cfmm::CfmmState& pool, const cfmm::MarketOrder& order,
                   const McOptions& options, std::vector<McSample> samples) {
  McReport rep;
  rep.seed = options.seed;
  rep.n_samples = samples.size();
  rep.forecast_price = cfmm::execution_price(pool, order);

  std::vector<double> price, reserve, ks;
  price.reserve(samples.size());
  reserve.reserve(samples.size());
  ks.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.rejected) continue;
    price.push_back(s.price);
    reserve.push_back(s.reserve_a);
    ks.push_back(static_cast<double>(s.k));
  }
  rep.n_accepted = price.size();
  rep.n_rejected = rep.n_samples - rep.n_accepted;
  rep.rejected_fraction = static_cast<double>(rep.n_rejected) / static_cast<double>(rep.n_samples);
  if (rep.n_accepted < 2) {
    throw numerical_error("fewer than two accepted replications; order flow exhausts the pool");
  }

  auto pm = stats::moments(price);
  auto rm = stats::moments(reserve);
  rep.mean_price = pm.mean;
  rep.var_price = pm.variance;
  rep.cv_price = std::sqrt(pm.variance) / pm.mean;
  rep.mean_reserve_a = rm.mean;
  rep.var_reserve_a = rm.variance;
  rep.mean_k = stats::moments(ks).mean;

  for (double k : options.chebyshev_k) {
    ChebyshevBand b;
    b.k = k;
    std::tie(b.half_width, b.prob_bound) = chebyshev_guarantee(rep.cv_price, k);
    b.lower = rep.mean_price * (1.0 - b.half_width);
    b.upper = rep.mean_price * (1.0 + b.half_width);
    // A zero-width band carries no Chebyshev content; count strict deviations.
    auto beyond = [&](double dev) { return b.half_width > 0.0 ? dev >= b.half_width : dev > 0.0; };
    std::size_t outside = 0, vs_forecast = 0;
    for (double x : price) {
      if (beyond(std::abs(x / rep.mean_price - 1.0))) ++outside;
      if (beyond(std::abs(x / rep.forecast_price - 1.0))) ++vs_forecast;
    }
    b.freq_outside_band = static_cast<double>(outside) / static_cast<double>(price.size());
    b.freq_vs_forecast = static_cast<double>(vs_forecast) / static_cast<double>(price.size());
    rep.bands.push_back(b);
  }
  if (options.keep_samples) rep.samples = std::move(samples);
  return rep;
}

}  // namespace

McReport mc_execution_price_serial(const cfmm::CfmmState& pool, const OrderSizeLaw& law,
                                   const KModel& k_model, const cfmm::MarketOrder& order,
                                   const McOptions& options) {
  check_inputs(order, options);
  std::vector<McSample> samples(options.n_samples);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    samples[r] = replicate(pool, law, k_model, order, options.seed, r);
  }
  return summarize(pool, order, options, std::move(samples));
}

McReport mc_execution_price(const cfmm::CfmmState& pool, const OrderSizeLaw& law,
                            const KModel& k_model, const cfmm::MarketOrder& order,
                            const McOptions& options) {
  check_inputs(order, options);
  std::vector<McSample> samples(options.n_samples);
  const auto n = static_cast<std::int64_t>(samples.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(options.threads, 1))
#endif
  for (std::int64_t r = 0; r < n; ++r) {
    samples[r] = replicate(pool, law, k_model, order, options.seed, static_cast<std::uint64_t>(r));
  }
  return summarize(pool, order, options, std::move(samples));
}

}  // namespace mempoolq::mc
