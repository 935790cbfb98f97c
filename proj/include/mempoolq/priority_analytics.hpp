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

#include <cstddef>
#include <optional>
#include <vector>

namespace mempoolq::analytics {

/// Stationary priority-queue model with Poisson high-priority arrivals and
/// exponential block times.
///
/// `p` is the geometric ratio of N (the high-priority pool size just before a
/// block): P(N = n) = (1 - p) p^n, with p the root in (0, 1) of
/// chi(p) = mu p^(beta+1) - (lambda + mu) p + lambda.
///
/// `q` is the geometric ratio of S (high-priority arrivals per block
/// interval): P(S = k) = (1 - q) q^k with q = lambda / (lambda + mu).
struct PriorityQueueModel {
  double lambda_high = 0.0;
  double mu = 1.0;
  int beta = 1;
  double p = 0.0;
  double q = 0.0;
};

double chi(double p, double lambda_high, double mu, int beta);

/// Root of chi in (0, 1) by bisection followed by Newton polishing. Returns 0
/// when lambda_high == 0; throws a numerical error if lambda_high >= mu * beta.
double solve_chi_root(double lambda_high, double mu, int beta);

/// Large-beta approximation lambda / (lambda + mu).
double chi_root_approximation(double lambda_high, double mu);

PriorityQueueModel make_model(double lambda_high, double mu, int beta);

/// The finite lists that determine the distribution of K. Two forms:
///  - arrivals form: prob_n for n < 2 beta and prob_s for k < beta;
///  - transition form: prob_n for n < beta and trans_from_full[k] = P^{>=beta}_k.
struct QueueInputs {
  int beta = 1;
  std::vector<double> prob_n;
  std::vector<double> prob_s;
  std::vector<double> trans_from_full;
  /// P(N >= beta) when known in closed form. Otherwise it is recovered from the
  /// head of prob_n, which loses relative accuracy when the tail is tiny.
  std::optional<double> full_mass;

  bool transition_form() const noexcept { return !trans_from_full.empty(); }
  /// Throws a validation error on malformed tables.
  void validate() const;
};

/// Geometric tables of the exponential-block-time model.
QueueInputs geometric_inputs(const PriorityQueueModel& model);

/// Stationary law of the embedded chain N' = max(N - beta, 0) + S for an
/// arbitrary per-interval arrival law, truncated at n_max, by power iteration.
std::vector<double> stationary_queue_distribution(const std::vector<double>& s_pmf, int beta,
                                                  std::size_t n_max, double tol = 1e-13,
                                                  int max_iter = 200000);

/// Inputs for constant block time T: S ~ Poisson(lambda T) and N from the
/// stationary embedded chain.
QueueInputs constant_block_time_inputs(double lambda_high, double block_time, int beta);

/// P(N >= beta): full_mass if set, else 1 - sum_{n < beta} P(N = n).
double prob_full(const QueueInputs& inputs);

/// P^{>=beta}_k = P(N_n = k | N_{n-1} >= beta) for 0 <= k < beta.
double transition_prob(const QueueInputs& inputs, int k);

/// P^{>=beta}_{<beta}: probability of leaving the full region in one step.
double transition_below(const QueueInputs& inputs);

/// Distribution of the relative block number K'.
class KPrimeDistribution {
 public:
  KPrimeDistribution(double prob_first, double leave_prob);

  double pmf(std::size_t k) const;
  /// P(K' > k).
  double tail(std::size_t k) const;
  double mean() const;
  std::vector<double> table(std::size_t k_max) const;

  double prob_first() const noexcept { return prob_first_; }
  double leave_prob() const noexcept { return leave_; }

 private:
  double prob_first_;  // P(K' = 0) = P(N < beta)
  double leave_;       // P^{>=beta}_{<beta}
};

KPrimeDistribution kprime_distribution(const QueueInputs& inputs);

/// P(K'' = k | K' = 0) = P(N = k) / P(N < beta), k < beta.
std::vector<double> kpp_first_block(const QueueInputs& inputs);

/// P(K'' = k | K' > 0) = P^{>=beta}_k / P^{>=beta}_{<beta}, k < beta.
std::vector<double> kpp_later_blocks(const QueueInputs& inputs);

/// P(K = k) = P(N = k) for k < beta.
std::vector<double> k_head_distribution(const QueueInputs& inputs);

struct KTable {
  std::vector<double> probs;  // P(K = k), k = 0..k_max
  double tail_mass = 0.0;     // P(K > k_max)
};

/// P(K = beta K' + K'') for k <= k_max.
KTable full_k_distribution(const QueueInputs& inputs, std::size_t k_max);

struct KDistributions {
  KPrimeDistribution kprime{1.0, 1.0};
  std::vector<double> kpp_first;
  std::vector<double> kpp_later;  // empty when P(N >= beta) == 0
  std::vector<double> k_head;
};

KDistributions k_distributions(const QueueInputs& inputs);

}  // namespace mempoolq::analytics
