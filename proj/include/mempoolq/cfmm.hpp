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

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "mempoolq/state_machine.hpp"

namespace mempoolq::cfmm {

/// A CFMM pricing rule on one level set: the invariant f(x, y) and the cost
/// potential P(x), the B reserve that balances x units of A at the level.
///
/// Implementations are immutable and safe to share between threads.
class PricingRule {
 public:
  virtual ~PricingRule() = default;

  virtual std::string_view name() const = 0;
  virtual double level() const = 0;
  virtual double invariant(double x, double y) const = 0;
  virtual double potential(double x) const = 0;

  /// P'(x). Default is a central difference with h = max(1e-6, 1e-6 x).
  virtual double potential_derivative(double x) const;

  /// P(x) - P(x + a): B paid out for a units of A paid in. Rules override this
  /// when a closed form avoids cancellation.
  virtual double exchange(double x, double a) const;

  /// Open interval of admissible A reserves.
  virtual std::pair<double, double> domain() const {
    return {0.0, std::numeric_limits<double>::infinity()};
  }
};

using RulePtr = std::shared_ptr<const PricingRule>;

/// Constant product, f = xy, P(x) = L / x.
class CpmmRule final : public PricingRule {
 public:
  explicit CpmmRule(double level);
  std::string_view name() const override { return "cpmm"; }
  double level() const override { return level_; }
  double invariant(double x, double y) const override { return x * y; }
  double potential(double x) const override { return level_ / x; }
  double potential_derivative(double x) const override { return -level_ / (x * x); }
  double exchange(double x, double a) const override;

 private:
  double level_;
};

/// Constant sum, f = x + y, P(x) = L - x. Linear, hence not sandwichable.
class ConstantSumRule final : public PricingRule {
 public:
  explicit ConstantSumRule(double level);
  std::string_view name() const override { return "constant_sum"; }
  double level() const override { return level_; }
  double invariant(double x, double y) const override { return x + y; }
  double potential(double x) const override { return level_ - x; }
  double potential_derivative(double) const override { return -1.0; }
  double exchange(double, double a) const override { return a; }
  std::pair<double, double> domain() const override { return {0.0, level_}; }

 private:
  double level_;
};

/// Weighted geometric mean, f = x^w y^(1-w), P(x) = (L / x^w)^(1/(1-w)).
class WeightedProductRule final : public PricingRule {
 public:
  WeightedProductRule(double weight_a, double level);
  std::string_view name() const override { return "weighted_product"; }
  double level() const override { return level_; }
  double invariant(double x, double y) const override;
  double potential(double x) const override;
  double potential_derivative(double x) const override;
  double weight_a() const noexcept { return weight_; }

 private:
  double weight_;
  double level_;
};

/// User-supplied rule without closed-form derivatives.
class CustomRule final : public PricingRule {
 public:
  CustomRule(std::string name, double level,
             std::function<double(double, double)> invariant,
             std::function<double(double)> potential);
  std::string_view name() const override { return name_; }
  double level() const override { return level_; }
  double invariant(double x, double y) const override { return invariant_(x, y); }
  double potential(double x) const override { return potential_(x); }

 private:
  std::string name_;
  double level_;
  std::function<double(double, double)> invariant_;
  std::function<double(double)> potential_;
};

RulePtr cpmm_rule(double level);

/// Builds the named rule ("cpmm", "constant_sum", "weighted_product") on the
/// level set through (reserve_a, reserve_b).
RulePtr make_rule(std::string_view name, double reserve_a, double reserve_b,
                  double weight_a = 0.5);

/// Reserves of a two-token pool; reserve_b always equals rule->potential(reserve_a).
class CfmmState {
 public:
  CfmmState(RulePtr rule, double reserve_a);

  /// Pool through (reserve_a, reserve_b) under the named rule.
  static CfmmState from_reserves(std::string_view rule_name, double reserve_a,
                                 double reserve_b);

  double reserve_a() const noexcept { return reserve_a_; }
  double reserve_b() const noexcept { return reserve_b_; }
  const PricingRule& rule() const noexcept { return *rule_; }
  const RulePtr& rule_ptr() const noexcept { return rule_; }

  /// Marginal price of B in A units, -P'(reserve_a).
  double marginal_price() const { return -rule_->potential_derivative(reserve_a_); }

  CfmmState with_reserve_a(double reserve_a) const { return CfmmState(rule_, reserve_a); }

 private:
  RulePtr rule_;
  double reserve_a_;
  double reserve_b_;
};

/// Signed A-denominated market order; positive buys B with A, negative sells B for A.
struct MarketOrder {
  double signed_amount = 0.0;

  bool is_buy() const noexcept { return signed_amount > 0.0; }
  double size() const noexcept { return signed_amount < 0.0 ? -signed_amount : signed_amount; }
};

/// B received for paying a > 0 units of A into the pool.
double exchange_out(const CfmmState& state, double a);

/// Two-coordinate (A, B) payoff of a BUY of a: (-a, exchange_out).
std::array<double, 2> swap_payoff(const CfmmState& state, double a);

/// The payoff valued at an external price of B in A units.
double scalar_swap_payoff(const CfmmState& state, double a, double external_price);

/// Pool after the order. Throws if a SELL would push reserve_a out of the domain.
CfmmState apply_order(const CfmmState& state, const MarketOrder& order);

/// Whether apply_order succeeds.
bool order_fits(const CfmmState& state, const MarketOrder& order);

/// B moved to the trader by `order` at `state` (negative for SELL orders).
double order_b_delta(const CfmmState& state, const MarketOrder& order);

/// Average realised price |B delta| / |A amount| of `order` at `state`.
double execution_price(const CfmmState& state, const MarketOrder& order);

/// Translation of the order between trader and pool address in a token-balance
/// state, so a swap is a conditional balanced translation like any other payload.
state::BalancedTranslation order_translation(const CfmmState& pool,
                                             const MarketOrder& order,
                                             const state::Address& trader,
                                             const state::Address& market,
                                             const state::Token& token_a,
                                             const state::Token& token_b);

struct SandwichTriple {
  double tau_minus = 0.0;
  MarketOrder tau_0;
  double tau_plus = 0.0;
  state::Address sandwicher;
  state::Address victim;
};

/// Memoryless sandwich of `victim` with front-run size epsilon in the victim's
/// direction, back-run reversing it.
SandwichTriple memoryless_sandwich(const MarketOrder& victim, double epsilon,
                                   state::Address sandwicher = "S",
                                   state::Address victim_address = "P");

/// Sandwicher payoff (A, B) of the memoryless sandwich around a victim order of
/// signed size tau_0. The A coordinate is exactly 0.
std::array<double, 2> memoryless_sandwich_payoff(const CfmmState& state, double tau_0,
                                                 double epsilon);

/// Limit of payoff_B / epsilon as epsilon -> 0: P'(x + tau_0) - P'(x) for BUY victims.
double marginal_sandwich_payoff(const CfmmState& state, double tau_0);

/// Pool state after executing the triple in order.
CfmmState apply_sandwich(const CfmmState& state, const SandwichTriple& sandwich);

struct ConvexityReport {
  bool second_difference_positive = false;  // P'' > 0 on the grid
  bool increments_increasing = false;       // x -> P(x+a) - P(x) strictly increasing
  double min_second_derivative = 0.0;
};

/// Checks strict convexity of the rule's potential on [x_lo, x_hi] by two
/// criteria and returns their common verdict. Throws a numerical error if they
/// disagree.
bool is_strictly_convex(const PricingRule& rule, double x_lo, double x_hi,
                        int grid_points = 64, ConvexityReport* report = nullptr);

}  // namespace mempoolq::cfmm
