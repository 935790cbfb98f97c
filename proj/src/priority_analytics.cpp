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

#include "mempoolq/priority_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mempoolq/error.hpp"

namespace mempoolq::analytics {

double chi(double p, double lambda_high, double mu, int beta) {
  return mu * std::pow(p, beta + 1) - (lambda_high + mu) * p + lambda_high;
}

namespace {

double chi_derivative(double p, double lambda_high, double mu, int beta) {
  return mu * (beta + 1) * std::pow(p, beta) - (lambda_high + mu);
}

void require_model_params(double lambda_high, double mu, int beta) {
  if (!(lambda_high >= 0.0) || !std::isfinite(lambda_high)) {
    throw validation_error("lambda_high must be finite and >= 0");
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) throw validation_error("mu must be finite and > 0");
  if (beta < 1) throw validation_error("beta must be >= 1");
}

double sum(const std::vector<double>& v, std::size_t n) {
  n = std::min(n, v.size());
  return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
}

}  // namespace

double solve_chi_root(double lambda_high, double mu, int beta) {
  require_model_params(lambda_high, mu, beta);
  if (lambda_high == 0.0) return 0.0;
  if (lambda_high >= mu * beta) {
    throw numerical_error("no root in (0,1): queue unstable (lambda_high >= mu * beta)");
  }

  // chi(0) = lambda > 0 and chi(1) = 0 with chi'(1) = mu beta - lambda > 0, so
  // chi is negative just below 1. Find that point to close the bracket.
  double lo = 0.0;
  double hi = 1.0;
  for (double delta = 1e-2;; delta *= 0.5) {
    if (delta < 1e-16) throw numerical_error("no root in (0,1): failed to bracket chi");
    if (chi(1.0 - delta, lambda_high, mu, beta) < 0.0) {
      hi = 1.0 - delta;
      break;
    }
  }

  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    if (chi(mid, lambda_high, mu, beta) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  double p = 0.5 * (lo + hi);
  for (int i = 0; i < 8; ++i) {
    double d = chi_derivative(p, lambda_high, mu, beta);
    if (d == 0.0) break;
    double next = p - chi(p, lambda_high, mu, beta) / d;
    if (!(next > lo - 1e-12 && next < hi + 1e-12)) break;
    if (std::abs(chi(next, lambda_high, mu, beta)) > std::abs(chi(p, lambda_high, mu, beta))) break;
    bool done = next == p;
    p = next;
    if (done) break;
  }
  return p;
}

double chi_root_approximation(double lambda_high, double mu) {
  if (!(mu > 0.0)) throw validation_error("mu must be > 0");
  return lambda_high / (lambda_high + mu);
}

PriorityQueueModel make_model(double lambda_high, double mu, int beta) {
  PriorityQueueModel m;
  m.lambda_high = lambda_high;
  m.mu = mu;
  m.beta = beta;
  m.p = solve_chi_root(lambda_high, mu, beta);
  m.q = lambda_high / (lambda_high + mu);
  return m;
}

void QueueInputs::validate() const {
  if (beta < 1) throw validation_error("beta must be >= 1");
  auto check_table = [](const std::vector<double>& t, const char* name) {
    double running = 0.0;
    for (double v : t) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw validation_error(std::string(name) + " entries must lie in [0, 1]");
      }
      running += v;
      if (running > 1.0 + 1e-9) {
        throw validation_error(std::string(name) + " partial sums exceed 1");
      }
    }
  };
  check_table(prob_n, "prob_n");
  check_table(prob_s, "prob_s");
  check_table(trans_from_full, "trans_from_full");
  if (full_mass && !(*full_mass >= 0.0 && *full_mass <= 1.0)) throw validation_error("full_mass must lie in [0, 1]");
  const auto b = static_cast<std::size_t>(beta);
  if (transition_form()) {
    if (!prob_s.empty()) throw validation_error("give either prob_s or trans_from_full, not both");
    if (prob_n.size() < b) throw validation_error("prob_n needs beta entries");
    if (trans_from_full.size() != b) throw validation_error("trans_from_full needs beta entries");
  } else {
    if (prob_n.size() < 2 * b) throw validation_error("prob_n needs 2 beta entries");
    if (prob_s.size() < b) throw validation_error("prob_s needs beta entries");
  }
}

QueueInputs geometric_inputs(const PriorityQueueModel& model) {
  if (!(model.p >= 0.0 && model.p < 1.0)) throw validation_error("p must lie in [0, 1)");
  if (!(model.q >= 0.0 && model.q < 1.0)) throw validation_error("q must lie in [0, 1)");
  QueueInputs in;
  in.beta = model.beta;
  const int b = model.beta;
  in.prob_n.resize(2 * static_cast<std::size_t>(b));
  for (int n = 0; n < 2 * b; ++n) in.prob_n[n] = (1.0 - model.p) * std::pow(model.p, n);
  in.prob_s.resize(static_cast<std::size_t>(b));
  for (int k = 0; k < b; ++k) in.prob_s[k] = (1.0 - model.q) * std::pow(model.q, k);
  in.full_mass = std::pow(model.p, b);
  return in;
}

std::vector<double> stationary_queue_distribution(const std::vector<double>& s_pmf, int beta,
                                                  std::size_t n_max, double tol, int max_iter) {
  if (beta < 1) throw validation_error("beta must be >= 1");
  if (s_pmf.empty()) throw validation_error("arrival pmf is empty");
  const std::size_t size = n_max + 1;
  const auto b = static_cast<std::size_t>(beta);
  std::vector<double> dist(size, 0.0), base(size), next(size);
  dist[0] = 1.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::fill(base.begin(), base.end(), 0.0);
    for (std::size_t n = 0; n < size; ++n) base[n > b ? n - b : 0] += dist[n];
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t n = 0; n < size; ++n) {
      if (base[n] == 0.0) continue;
      for (std::size_t k = 0; k < s_pmf.size() && n + k < size; ++k) next[n + k] += base[n] * s_pmf[k];
    }
    double mass = std::accumulate(next.begin(), next.end(), 0.0);
    if (!(mass > 0.0)) throw numerical_error("stationary iteration lost all mass");
    double diff = 0.0;
    for (std::size_t n = 0; n < size; ++n) {
      next[n] /= mass;
      diff += std::abs(next[n] - dist[n]);
    }
    dist.swap(next);
    if (diff < tol) return dist;
  }
  throw numerical_error("stationary iteration did not converge");
}

QueueInputs constant_block_time_inputs(double lambda_high, double block_time, int beta) {
  require_model_params(lambda_high, 1.0, beta);
  if (!(block_time > 0.0)) throw validation_error("block time must be > 0");
  double mean = lambda_high * block_time;
  if (mean >= beta) throw numerical_error("queue unstable (lambda_high * T >= beta)");
  // Support up to mean + 12 sd keeps the dropped Poisson tail below 1e-20.
  auto s_max = static_cast<std::size_t>(mean + 12.0 * std::sqrt(mean) + 20.0);
  std::vector<double> s_pmf(s_max + 1);
  for (std::size_t k = 0; k <= s_max; ++k) {
    double kk = static_cast<double>(k);
    s_pmf[k] = mean == 0.0 ? (k == 0 ? 1.0 : 0.0)
                           : std::exp(kk * std::log(mean) - mean - std::lgamma(kk + 1.0));
  }
  // Geometric tail with ratio close to 1 under heavy load needs a long support.
  double load = mean / beta;
  auto n_max = static_cast<std::size_t>(std::max(4.0 * beta, 60.0 * beta / std::max(1e-3, 1.0 - load)));
  QueueInputs in;
  in.beta = beta;
  auto pi = stationary_queue_distribution(s_pmf, beta, n_max);
  in.prob_n.assign(pi.begin(), pi.begin() + 2 * beta);
  in.prob_s.assign(s_pmf.begin(), s_pmf.begin() + std::min<std::size_t>(beta, s_pmf.size()));
  in.prob_s.resize(static_cast<std::size_t>(beta), 0.0);
  return in;
}

double prob_full(const QueueInputs& inputs) {
  if (inputs.full_mass) return *inputs.full_mass;
  return std::max(0.0, 1.0 - sum(inputs.prob_n, static_cast<std::size_t>(inputs.beta)));
}

double transition_prob(const QueueInputs& inputs, int k) {
  inputs.validate();
  if (k < 0 || k >= inputs.beta) throw validation_error("target k must satisfy 0 <= k < beta");
  if (inputs.transition_form()) return inputs.trans_from_full[k];
  double full = prob_full(inputs);
  if (!(full > 0.0)) throw validation_error("conditioning event has zero mass: P(N >= beta) = 0");
  // N_{n-1} = beta + i with i <= k are the only full states that can reach k.
  double num = 0.0;
  for (int i = 0; i <= k; ++i) num += inputs.prob_n[inputs.beta + i] * inputs.prob_s[k - i];
  return num / full;
}

double transition_below(const QueueInputs& inputs) {
  double total = 0.0;
  for (int k = 0; k < inputs.beta; ++k) total += transition_prob(inputs, k);
  return total;
}

KPrimeDistribution::KPrimeDistribution(double prob_first, double leave_prob)
    : prob_first_(prob_first), leave_(leave_prob) {
  if (!(prob_first >= 0.0 && prob_first <= 1.0)) throw validation_error("P(K'=0) must lie in [0,1]");
  if (!(leave_prob >= 0.0 && leave_prob <= 1.0 + 1e-12)) {
    throw validation_error("leave probability must lie in [0,1]");
  }
  leave_ = std::min(leave_, 1.0);
  if (prob_first < 1.0 && leave_ == 0.0) {
    throw validation_error("conditioning event has zero mass: blocks never leave the full region");
  }
}

double KPrimeDistribution::pmf(std::size_t k) const {
  if (k == 0) return prob_first_;
  return (1.0 - prob_first_) * std::pow(1.0 - leave_, static_cast<double>(k - 1)) * leave_;
}

double KPrimeDistribution::tail(std::size_t k) const {
  return (1.0 - prob_first_) * std::pow(1.0 - leave_, static_cast<double>(k));
}

double KPrimeDistribution::mean() const {
  return prob_first_ == 1.0 ? 0.0 : (1.0 - prob_first_) / leave_;
}

std::vector<double> KPrimeDistribution::table(std::size_t k_max) const {
  std::vector<double> t(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) t[k] = pmf(k);
  return t;
}

KPrimeDistribution kprime_distribution(const QueueInputs& inputs) {
  inputs.validate();
  double first = std::min(1.0, sum(inputs.prob_n, static_cast<std::size_t>(inputs.beta)));
  if (first == 1.0) return KPrimeDistribution(1.0, 1.0);
  return KPrimeDistribution(first, transition_below(inputs));
}

std::vector<double> kpp_first_block(const QueueInputs& inputs) {
  inputs.validate();
  const auto b = static_cast<std::size_t>(inputs.beta);
  double below = sum(inputs.prob_n, b);
  if (!(below > 0.0)) throw validation_error("conditioning event has zero mass: P(N < beta) = 0");
  std::vector<double> t(inputs.prob_n.begin(), inputs.prob_n.begin() + static_cast<std::ptrdiff_t>(b));
  for (double& v : t) v /= below;
  return t;
}

std::vector<double> kpp_later_blocks(const QueueInputs& inputs) {
  std::vector<double> t(static_cast<std::size_t>(inputs.beta));
  for (int k = 0; k < inputs.beta; ++k) t[k] = transition_prob(inputs, k);
  double below = std::accumulate(t.begin(), t.end(), 0.0);
  if (!(below > 0.0)) throw validation_error("conditioning event has zero mass: P^{>=beta}_{<beta} = 0");
  for (double& v : t) v /= below;
  return t;
}

std::vector<double> k_head_distribution(const QueueInputs& inputs) {
  inputs.validate();
  return {inputs.prob_n.begin(), inputs.prob_n.begin() + inputs.beta};
}

KTable full_k_distribution(const QueueInputs& inputs, std::size_t k_max) {
  auto kprime = kprime_distribution(inputs);
  auto first = kpp_first_block(inputs);
  std::vector<double> later;
  if (kprime.prob_first() < 1.0) later = kpp_later_blocks(inputs);
  const auto b = static_cast<std::size_t>(inputs.beta);
  KTable out;
  out.probs.resize(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) {
    std::size_t block = k / b, pos = k % b;
    out.probs[k] = block == 0 ? kprime.pmf(0) * first[pos]
                              : (later.empty() ? 0.0 : kprime.pmf(block) * later[pos]);
  }
  out.tail_mass = std::max(0.0, 1.0 - std::accumulate(out.probs.begin(), out.probs.end(), 0.0));
  return out;
}

KDistributions k_distributions(const QueueInputs& inputs) {
  KDistributions d;
  d.kprime = kprime_distribution(inputs);
  d.kpp_first = kpp_first_block(inputs);
  if (d.kprime.prob_first() < 1.0) d.kpp_later = kpp_later_blocks(inputs);
  d.k_head = k_head_distribution(inputs);
  return d;
}

}  // namespace mempoolq::analytics
