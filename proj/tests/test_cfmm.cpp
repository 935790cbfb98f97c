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

#include "doctest.h"

#include <cmath>
#include <random>

#include "mempoolq/cfmm.hpp"
#include "mempoolq/error.hpp"

using namespace mempoolq;
using namespace mempoolq::cfmm;

namespace {

CfmmState cpmm(double a, double b) { return CfmmState::from_reserves("cpmm", a, b); }

// B paid out by x*y = L for a BUY of a, from the invariant directly.
double cpmm_out_oracle(double x, double y, double a) { return y - x * y / (x + a); }

}  // namespace

TEST_SUITE("cfmm") {

TEST_CASE("cpmm exchange on (100, 100) is 100/11 for a = 10") {
  auto s = cpmm(100.0, 100.0);
  CHECK(std::abs(exchange_out(s, 10.0) - 100.0 / 11.0) <= 1e-12);
  CHECK(s.marginal_price() == doctest::Approx(1.0).epsilon(1e-15));
  auto pay = swap_payoff(s, 10.0);
  CHECK(pay[0] == -10.0);
  CHECK(std::abs(pay[1] - 100.0 / 11.0) <= 1e-12);
}

TEST_CASE("exchange agrees with the invariant on random pools") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> r(1.0, 1e4), f(1e-4, 0.5);
  for (int i = 0; i < 1000; ++i) {
    double x = r(rng), y = r(rng), a = f(rng) * x;
    auto s = cpmm(x, y);
    REQUIRE(exchange_out(s, a) == doctest::Approx(cpmm_out_oracle(x, y, a)).epsilon(1e-12));
    auto after = apply_order(s, MarketOrder{a});
    REQUIRE(after.rule().invariant(after.reserve_a(), after.reserve_b()) ==
            doctest::Approx(x * y).epsilon(1e-12));
  }
}

TEST_CASE("orders round trip and respect the domain") {
  auto s = cpmm(100.0, 100.0);
  auto there = apply_order(s, MarketOrder{10.0});
  auto back = apply_order(there, MarketOrder{-10.0});
  CHECK(back.reserve_a() == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(back.reserve_b() == doctest::Approx(100.0).epsilon(1e-14));
  CHECK_FALSE(order_fits(s, MarketOrder{-100.0}));
  CHECK_THROWS_AS(apply_order(s, MarketOrder{-150.0}), Error);
  CHECK_THROWS_AS(apply_order(s, MarketOrder{0.0}), Error);
  CHECK(execution_price(s, MarketOrder{10.0}) == doctest::Approx(10.0 / 11.0).epsilon(1e-14));
  CHECK(execution_price(s, MarketOrder{-10.0}) == doctest::Approx(100.0 / 90.0).epsilon(1e-14));
}

TEST_CASE("memoryless sandwich pays 50/33 at tau_0 = 10, epsilon = 10") {
  auto s = cpmm(100.0, 100.0);
  auto pay = memoryless_sandwich_payoff(s, 10.0, 10.0);
  CHECK(pay[0] == 0.0);
  CHECK(std::abs(pay[1] - 50.0 / 33.0) <= 1e-12);

  auto triple = memoryless_sandwich(MarketOrder{10.0}, 10.0);
  CHECK(triple.tau_minus == 10.0);
  CHECK(triple.tau_plus == -10.0);
  auto after = apply_sandwich(s, triple);
  auto plain = apply_order(s, MarketOrder{10.0});
  CHECK(std::abs(after.reserve_a() - plain.reserve_a()) <= 1e-12 * plain.reserve_a());
  CHECK(std::abs(after.reserve_b() - plain.reserve_b()) <= 1e-12 * plain.reserve_b());
}

TEST_CASE("sandwich payoff matches the balance changes of the three translations") {
  auto pool = cpmm(100.0, 100.0);
  state::TokenBalanceState bal{{{"S", "A"}, 10.0}, {{"P", "A"}, 10.0},
                               {{"M", "A"}, 100.0}, {{"M", "B"}, 100.0}};
  auto triple = memoryless_sandwich(MarketOrder{10.0}, 10.0);
  auto step = [&](const MarketOrder& o, const state::Address& who) {
    auto t = order_translation(pool, o, who, "M", "A", "B");
    REQUIRE(state::translation_applies(bal, t));
    bal = state::apply_translation(bal, t);
    pool = apply_order(pool, o);
  };
  step(MarketOrder{triple.tau_minus}, "S");
  step(triple.tau_0, "P");
  step(MarketOrder{triple.tau_plus}, "S");
  CHECK(bal.balance("S", "A") == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(std::abs(bal.balance("S", "B") - 50.0 / 33.0) <= 1e-12);
  CHECK(bal.balance("M", "A") == doctest::Approx(pool.reserve_a()).epsilon(1e-14));
  CHECK(bal.balance("M", "B") == doctest::Approx(pool.reserve_b()).epsilon(1e-14));
}

TEST_CASE("strictly convex rules give positive sandwich payoffs") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> r(10.0, 1e4), f(1e-3, 0.3), w(0.1, 0.9);
  for (int i = 0; i < 1000; ++i) {
    double x = r(rng), y = r(rng);
    double tau = f(rng) * x, eps = f(rng) * x;
    auto c = cpmm(x, y);
    REQUIRE(memoryless_sandwich_payoff(c, tau, eps)[1] > 0.0);
    REQUIRE(memoryless_sandwich_payoff(c, -0.5 * tau, 0.5 * eps)[1] > 0.0);
    CfmmState wp(make_rule("weighted_product", x, y, w(rng)), x);
    REQUIRE(memoryless_sandwich_payoff(wp, tau, eps)[1] > 0.0);
    REQUIRE(marginal_sandwich_payoff(c, tau) > 0.0);
  }
}

TEST_CASE("constant-sum rule is linear and never sandwichable") {
  auto s = CfmmState::from_reserves("constant_sum", 100.0, 100.0);
  CHECK(exchange_out(s, 10.0) == 10.0);
  CHECK(memoryless_sandwich_payoff(s, 10.0, 10.0)[1] == 0.0);
  CHECK(marginal_sandwich_payoff(s, 10.0) == 0.0);
  CHECK_FALSE(is_strictly_convex(s.rule(), 10.0, 150.0));
}

TEST_CASE("marginal payoff is the epsilon -> 0 limit") {
  auto s = cpmm(100.0, 100.0);
  double eps = 1e-5;
  double finite = memoryless_sandwich_payoff(s, 10.0, eps)[1] / eps;
  CHECK(finite == doctest::Approx(marginal_sandwich_payoff(s, 10.0)).epsilon(1e-4));
  // P'(110) - P'(100) for P = 1e4 / x.
  CHECK(marginal_sandwich_payoff(s, 10.0) == doctest::Approx(-1e4 / (110.0 * 110.0) + 1.0).epsilon(1e-12));
}

TEST_CASE("convexity verdicts") {
  ConvexityReport report;
  CHECK(is_strictly_convex(*cpmm_rule(1e4), 1.0, 1e3, 64, &report));
  CHECK(report.second_difference_positive);
  CHECK(report.increments_increasing);
  CHECK(report.min_second_derivative > 0.0);
  CHECK(is_strictly_convex(*make_rule("weighted_product", 100.0, 300.0, 0.25), 10.0, 1000.0));

  CustomRule concave("sqrt", 10.0, [](double x, double y) { return y * y + x; },
                     [](double x) { return std::sqrt(100.0 - x); });
  CHECK_FALSE(is_strictly_convex(concave, 1.0, 90.0));
  CHECK_THROWS_AS(is_strictly_convex(*cpmm_rule(1.0), 2.0, 1.0), Error);
}

TEST_CASE("weighted product derivative agrees with central differences") {
  WeightedProductRule rule(0.3, 50.0);
  for (double x : {1.0, 7.5, 40.0, 300.0}) {
    double h = 1e-6 * x;
    double numeric = (rule.potential(x + h) - rule.potential(x - h)) / (2.0 * h);
    CHECK(rule.potential_derivative(x) == doctest::Approx(numeric).epsilon(1e-6));
    CHECK(rule.invariant(x, rule.potential(x)) == doctest::Approx(50.0).epsilon(1e-12));
  }
}

}
