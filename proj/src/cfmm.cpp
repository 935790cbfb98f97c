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

#include "mempoolq/cfmm.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mempoolq/error.hpp"

namespace mempoolq::cfmm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool inside(const PricingRule& rule, double x) {
  auto [lo, hi] = rule.domain();
  return x > lo && x < hi;
}

}  // namespace

double PricingRule::potential_derivative(double x) const {
  double h = std::max(1e-6, 1e-6 * std::abs(x));
  auto [lo, hi] = domain();
  h = std::min({h, 0.5 * (x - lo), 0.5 * (hi - x)});
  return (potential(x + h) - potential(x - h)) / (2.0 * h);
}

double PricingRule::exchange(double x, double a) const {
  return potential(x) - potential(x + a);
}

CpmmRule::CpmmRule(double level) : level_(level) {
  if (!(level > 0.0) || !std::isfinite(level)) throw validation_error("cpmm level must be > 0");
}

double CpmmRule::exchange(double x, double a) const {
  // L/x - L/(x+a) without the cancellation.
  return level_ * a / (x * (x + a));
}

ConstantSumRule::ConstantSumRule(double level) : level_(level) {
  if (!(level > 0.0)) throw validation_error("constant-sum level must be > 0");
}

WeightedProductRule::WeightedProductRule(double weight_a, double level)
    : weight_(weight_a), level_(level) {
  if (!(weight_a > 0.0 && weight_a < 1.0)) {
    throw validation_error("weighted-product weight must lie in (0, 1)");
  }
  if (!(level > 0.0)) throw validation_error("weighted-product level must be > 0");
}

double WeightedProductRule::invariant(double x, double y) const {
  return std::pow(x, weight_) * std::pow(y, 1.0 - weight_);
}

double WeightedProductRule::potential(double x) const {
  return std::pow(level_ / std::pow(x, weight_), 1.0 / (1.0 - weight_));
}

double WeightedProductRule::potential_derivative(double x) const {
  return -(weight_ / (1.0 - weight_)) * potential(x) / x;
}

CustomRule::CustomRule(std::string name, double level,
                       std::function<double(double, double)> invariant,
                       std::function<double(double)> potential)
    : name_(std::move(name)),
      level_(level),
      invariant_(std::move(invariant)),
      potential_(std::move(potential)) {}

RulePtr cpmm_rule(double level) { return std::make_shared<CpmmRule>(level); }

RulePtr make_rule(std::string_view name, double reserve_a, double reserve_b,
                  double weight_a) {
  if (!(reserve_a > 0.0) || !(reserve_b > 0.0)) {
    throw validation_error("pool reserves must be > 0");
  }
  if (name == "cpmm") return std::make_shared<CpmmRule>(reserve_a * reserve_b);
  if (name == "constant_sum") return std::make_shared<ConstantSumRule>(reserve_a + reserve_b);
  if (name == "weighted_product") {
    double level = std::pow(reserve_a, weight_a) * std::pow(reserve_b, 1.0 - weight_a);
    return std::make_shared<WeightedProductRule>(weight_a, level);
  }
  throw validation_error("unknown pricing rule '" + std::string(name) + "'");
}

CfmmState::CfmmState(RulePtr rule, double reserve_a)
    : rule_(std::move(rule)), reserve_a_(reserve_a) {
  if (!rule_) throw validation_error("pool has no pricing rule");
  if (!inside(*rule_, reserve_a)) throw validation_error("reserve_a outside the rule's domain");
  reserve_b_ = rule_->potential(reserve_a);
}

CfmmState CfmmState::from_reserves(std::string_view rule_name, double reserve_a,
                                   double reserve_b) {
  return CfmmState(make_rule(rule_name, reserve_a, reserve_b), reserve_a);
}

double exchange_out(const CfmmState& state, double a) {
  if (!(a > 0.0)) throw validation_error("exchange amount must be > 0");
  return state.rule().exchange(state.reserve_a(), a);
}

std::array<double, 2> swap_payoff(const CfmmState& state, double a) {
  return {-a, exchange_out(state, a)};
}

double scalar_swap_payoff(const CfmmState& state, double a, double external_price) {
  auto [pay_a, get_b] = swap_payoff(state, a);
  return pay_a + external_price * get_b;
}

bool order_fits(const CfmmState& state, const MarketOrder& order) {
  return inside(state.rule(), state.reserve_a() + order.signed_amount);
}

CfmmState apply_order(const CfmmState& state, const MarketOrder& order) {
  if (order.signed_amount == 0.0) throw validation_error("market order amount must be non-zero");
  if (!order_fits(state, order)) {
    throw validation_error("order would move reserve_a outside the rule's domain");
  }
  return state.with_reserve_a(state.reserve_a() + order.signed_amount);
}

double order_b_delta(const CfmmState& state, const MarketOrder& order) {
  return state.rule().exchange(state.reserve_a(), order.signed_amount);
}

double execution_price(const CfmmState& state, const MarketOrder& order) {
  if (order.signed_amount == 0.0) throw validation_error("market order amount must be non-zero");
  return std::abs(order_b_delta(state, order)) / order.size();
}

state::BalancedTranslation order_translation(const CfmmState& pool,
                                             const MarketOrder& order,
                                             const state::Address& trader,
                                             const state::Address& market,
                                             const state::Token& token_a,
                                             const state::Token& token_b) {
  return state::trade_translation(trader, market, token_a, token_b, -order.signed_amount,
                                  order_b_delta(pool, order));
}

SandwichTriple memoryless_sandwich(const MarketOrder& victim, double epsilon,
                                   state::Address sandwicher,
                                   state::Address victim_address) {
  if (victim.signed_amount == 0.0) throw validation_error("victim order amount must be non-zero");
  if (!(epsilon > 0.0)) throw validation_error("sandwich size must be > 0");
  double front = victim.is_buy() ? epsilon : -epsilon;
  return {front, victim, -front, std::move(sandwicher), std::move(victim_address)};
}

std::array<double, 2> memoryless_sandwich_payoff(const CfmmState& state, double tau_0,
                                                 double epsilon) {
  auto triple = memoryless_sandwich(MarketOrder{tau_0}, epsilon);
  const auto& rule = state.rule();
  double x = state.reserve_a();
  if (!inside(rule, x + triple.tau_minus) || !inside(rule, x + triple.tau_minus + tau_0) ||
      !inside(rule, x + tau_0)) {
    throw validation_error("sandwich leaves the rule's domain");
  }
  // Front-run at x, back-run at x + front + tau_0 reversing the front-run:
  // P(x) - P(x+e) + P(x+e+t) - P(x+t).
  double payoff_b = rule.exchange(x, triple.tau_minus) - rule.exchange(x + tau_0, triple.tau_minus);
  return {0.0, payoff_b};
}

double marginal_sandwich_payoff(const CfmmState& state, double tau_0) {
  const auto& rule = state.rule();
  double x = state.reserve_a();
  double diff = rule.potential_derivative(x + tau_0) - rule.potential_derivative(x);
  return tau_0 > 0.0 ? diff : -diff;
}

CfmmState apply_sandwich(const CfmmState& state, const SandwichTriple& sandwich) {
  CfmmState s = apply_order(state, MarketOrder{sandwich.tau_minus});
  s = apply_order(s, sandwich.tau_0);
  return apply_order(s, MarketOrder{sandwich.tau_plus});
}

bool is_strictly_convex(const PricingRule& rule, double x_lo, double x_hi, int grid_points,
                        ConvexityReport* report) {
  if (!(x_lo < x_hi) || !inside(rule, x_lo) || !inside(rule, x_hi)) {
    throw validation_error("convexity range must be a non-empty interval inside the domain");
  }
  grid_points = std::max(grid_points, 4);
  auto [dom_lo, dom_hi] = rule.domain();
  std::vector<double> grid(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    grid[i] = x_lo + (x_hi - x_lo) * i / (grid_points - 1);
  }

  ConvexityReport r;
  r.second_difference_positive = true;
  r.min_second_derivative = std::numeric_limits<double>::infinity();
  for (double x : grid) {
    double h = 1e-3 * std::max(1.0, std::abs(x));
    h = std::min({h, 0.5 * (x - dom_lo), 0.5 * (dom_hi - x)});
    double pm = rule.potential(x - h), p0 = rule.potential(x), pp = rule.potential(x + h);
    double d2 = (pp - 2.0 * p0 + pm) / (h * h);
    double noise = 64.0 * kEps * (std::abs(pm) + 2.0 * std::abs(p0) + std::abs(pp)) / (h * h);
    r.min_second_derivative = std::min(r.min_second_derivative, d2);
    if (!(d2 > noise)) r.second_difference_positive = false;
  }

  r.increments_increasing = true;
  for (double frac : {1e-3, 1e-2, 1e-1}) {
    double a = (x_hi - x_lo) * frac;
    for (int i = 0; i + 1 < grid_points; ++i) {
      double x0 = grid[i], x1 = grid[i + 1];
      if (!inside(rule, x1 + a)) continue;
      double g0 = rule.potential(x0 + a) - rule.potential(x0);
      double g1 = rule.potential(x1 + a) - rule.potential(x1);
      double noise = 64.0 * kEps *
                     (std::abs(rule.potential(x0)) + std::abs(rule.potential(x0 + a)) +
                      std::abs(rule.potential(x1)) + std::abs(rule.potential(x1 + a)));
      if (!(g1 - g0 > noise)) r.increments_increasing = false;
    }
  }

  if (report) *report = r;
  if (r.second_difference_positive != r.increments_increasing) {
    throw numerical_error("convexity criteria disagree on [" + std::to_string(x_lo) + ", " +
                          std::to_string(x_hi) + "]");
  }
  return r.second_difference_positive;
}

}  // namespace mempoolq::cfmm
