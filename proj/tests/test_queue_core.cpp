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

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>
#include <set>

#include "mempoolq/error.hpp"
#include "mempoolq/priority_analytics.hpp"
#include "mempoolq/queue_core.hpp"
#include "mempoolq/stats.hpp"
#include "oracles.hpp"

using namespace mempoolq;
using namespace mempoolq::queue;

namespace {

SimConfig priority_config(double lambda, int beta, std::int64_t blocks, std::uint64_t seed) {
  SimConfig c;
  c.lambda = lambda;
  c.mu = 1.0;
  c.beta = beta;
  c.horizon_blocks = blocks;
  c.seed = seed;
  return c;
}

bool same_trace(const SimTrace& a, const SimTrace& b) {
  if (a.blocks.size() != b.blocks.size() || a.message_outcomes.size() != b.message_outcomes.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    const auto& x = a.blocks[i];
    const auto& y = b.blocks[i];
    if (x.time != y.time || x.length != y.length || x.high_priority_before != y.high_priority_before ||
        x.messages.size() != y.messages.size()) {
      return false;
    }
    for (std::size_t j = 0; j < x.messages.size(); ++j) {
      if (x.messages[j].id != y.messages[j].id || x.messages[j].priority != y.messages[j].priority) return false;
    }
  }
  for (std::size_t i = 0; i < a.message_outcomes.size(); ++i) {
    if (a.message_outcomes[i].k != b.message_outcomes[i].k ||
        a.message_outcomes[i].arrival_time != b.message_outcomes[i].arrival_time) {
      return false;
    }
  }
  return a.n_hist.counts == b.n_hist.counts && a.final_reserve_a == b.final_reserve_a &&
         a.aligned_probes.kprime.counts == b.aligned_probes.kprime.counts;
}

}  // namespace

TEST_SUITE("queue_core") {

TEST_CASE("arrival gaps are exponential and priorities uniform") {
  Rng rng = make_rng(123, 0);
  auto arrivals = sample_arrivals(2.0, 5000.0, rng);
  REQUIRE(arrivals.size() > 9000);
  std::vector<double> gaps, prios;
  double last = 0.0;
  for (const auto& m : arrivals) {
    gaps.push_back(m.arrival_time - last);
    prios.push_back(m.priority);
    last = m.arrival_time;
  }
  double d_gap = oracle::ks_statistic(gaps, [](double x) { return 1.0 - std::exp(-2.0 * x); });
  double d_pri = oracle::ks_statistic(prios, [](double x) { return x; });
  CHECK(oracle::ks_pvalue(d_gap, gaps.size()) > 0.01);
  CHECK(oracle::ks_pvalue(d_pri, prios.size()) > 0.01);
  // Poisson count: mean 10^4, sd 100.
  CHECK(std::abs(static_cast<double>(arrivals.size()) - 10000.0) < 400.0);
  CHECK(sample_arrivals(0.0, 10.0, rng).empty());
}

TEST_CASE("priority schedule equals the sorted top of the pool") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    MessagePool pool(0.0);
    std::vector<Message> all;
    int n = static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      Message m{.id = static_cast<MessageId>(i), .arrival_time = i * 1.0, .priority = u(rng)};
      pool.insert(m);
      all.push_back(m);
    }
    int beta = 1 + static_cast<int>(rng() % 10);
    auto block = priority_schedule(pool, beta);

    std::vector<Message> high, low;
    for (const auto& m : all) (m.priority > 0.0 ? high : low).push_back(m);
    std::sort(high.begin(), high.end(), [](auto& a, auto& b) { return a.priority > b.priority; });
    std::vector<Message> expect(high.begin(), high.begin() + std::min<std::size_t>(beta, high.size()));
    std::vector<Message> fill(low.begin(), low.begin() + std::min<std::size_t>(beta - expect.size(), low.size()));
    std::sort(fill.begin(), fill.end(), [](auto& a, auto& b) { return a.priority > b.priority; });
    expect.insert(expect.end(), fill.begin(), fill.end());

    REQUIRE(block.size() == expect.size());
    for (std::size_t i = 0; i < block.size(); ++i) REQUIRE(block[i].id == expect[i].id);
    CHECK(pool.high_count() == high.size());
  }
}

TEST_CASE("priority schedule rejects ties and weak injections") {
  MessagePool pool(0.0);
  pool.insert({.id = 1, .priority = 0.5});
  pool.insert({.id = 2, .priority = 0.5});
  CHECK_THROWS_AS(priority_schedule(pool, 1), Error);
  MessagePool clean(0.0);
  clean.insert({.id = 1, .priority = 0.7});
  std::vector<Message> weak{{.id = 9, .priority = 0.1, .injected = true}};
  CHECK_THROWS_AS(priority_schedule(clean, 2, weak), Error);
  std::vector<Message> strong{{.id = 9, .priority = kInjectedPriority, .injected = true}};
  auto block = priority_schedule(clean, 2, strong);
  REQUIRE(block.size() == 2);
  CHECK(block[0].id == 9);
  CHECK_THROWS_AS(pool.insert({.id = 1, .priority = 0.1}), Error);
}

TEST_CASE("with no arrivals a fully injecting scheduler fills every block") {
  SimConfig c = priority_config(0.0, 4, 200, 1);
  c.scheduler = {.kind = SchedulerKind::naive, .p_inj = 1.0};
  auto trace = run_simulation(c);
  for (const auto& b : trace.blocks) {
    CHECK(b.injected == 4);
    CHECK(b.pool_size_before == 0);
  }
  CHECK(trace.message_outcomes.empty());
}

TEST_CASE("pool conservation and outcome identities") {
  SimConfig c = priority_config(3.0, 4, 5000, 77);
  c.reference_priority = 0.3;
  auto trace = run_simulation(c);
  std::set<MessageId> seen;
  std::int64_t pool_size = 0;
  for (const auto& b : trace.blocks) {
    CHECK(b.pool_size_before == pool_size + b.arrivals);
    for (const auto& m : b.messages) REQUIRE(seen.insert(m.id).second);
    pool_size = b.pool_size_before - b.length + b.injected;
    // Work conservation on the high-priority queue.
    CHECK(b.high_priority_included == std::min<std::int64_t>(c.beta, b.high_priority_before));
  }
  std::size_t censored = 0;
  for (const auto& o : trace.message_outcomes) {
    if (o.censored) {
      ++censored;
      continue;
    }
    REQUIRE(o.k_prime >= 0);
    REQUIRE(o.k_double_prime >= 0);
    REQUIRE(o.k_double_prime < c.beta);
    REQUIRE(o.k == c.beta * o.k_prime + o.k_double_prime);
    REQUIRE(trace.blocks[o.first_block].time >= o.arrival_time);
    if (o.first_block > 0) REQUIRE(trace.blocks[o.first_block - 1].time < o.arrival_time);
  }
  CHECK(censored == static_cast<std::size_t>(pool_size));
}

TEST_CASE("naive scheduler injects i.i.d. binomial counts") {
  SimConfig c = priority_config(2.0, 5, 10000, 5);
  c.scheduler = {.kind = SchedulerKind::naive, .p_inj = 0.3};
  c.warmup_blocks = 0;
  auto trace = run_simulation(c);
  std::vector<double> counts;
  for (const auto& b : trace.blocks) counts.push_back(static_cast<double>(b.injected));
  auto m = stats::moments(counts);
  CHECK(std::abs(m.mean - 1.5) < 3.0 * std::sqrt(1.05 / counts.size()));
  CHECK(m.variance == doctest::Approx(1.05).epsilon(0.05));

  // Lag-1 contingency table on {0, 1, 2, >=3}.
  const int cats = 4;
  std::vector<std::vector<double>> table(cats, std::vector<double>(cats, 0.0));
  for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
    int a = std::min(static_cast<int>(counts[i]), cats - 1);
    int b = std::min(static_cast<int>(counts[i + 1]), cats - 1);
    table[a][b] += 1.0;
  }
  std::vector<double> rows(cats, 0.0), cols(cats, 0.0);
  double total = 0.0;
  for (int a = 0; a < cats; ++a) {
    for (int b = 0; b < cats; ++b) {
      rows[a] += table[a][b];
      cols[b] += table[a][b];
      total += table[a][b];
    }
  }
  double stat = 0.0;
  for (int a = 0; a < cats; ++a) {
    for (int b = 0; b < cats; ++b) {
      double e = rows[a] * cols[b] / total;
      stat += (table[a][b] - e) * (table[a][b] - e) / e;
    }
  }
  boost::math::chi_squared dist((cats - 1) * (cats - 1));
  CHECK(boost::math::cdf(boost::math::complement(dist, stat)) > 0.01);
}

TEST_CASE("embedded chain matches the geometric law at lambda / mu = 1, beta = 5") {
  auto c = priority_config(1.0, 5, 100000, 2024);
  c.record_messages = false;
  auto trace = run_simulation(c);
  double p = analytics::solve_chi_root(1.0, 1.0, 5);
  auto emp = trace.n_hist.pmf();
  std::vector<double> geo(emp.size() + 1);
  for (std::size_t n = 0; n < emp.size(); ++n) geo[n] = (1.0 - p) * std::pow(p, n);
  geo.back() = std::pow(p, emp.size());
  CHECK(stats::total_variation(emp, geo) < 0.02);
}

TEST_CASE("constant block times shrink the embedded-chain variance") {
  auto c = priority_config(3.0, 4, 50000, 8);
  c.record_messages = false;
  auto expo = run_simulation(c);
  c.block_time_law = BlockTimeLaw::constant;
  auto cons = run_simulation(c);
  auto var = [](const Histogram& h) {
    double m = h.mean(), s = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) s += (i - m) * (i - m) * h.counts[i];
    return s / h.total;
  };
  CHECK(var(cons.n_hist) < var(expo.n_hist));
}

TEST_CASE("aligned probes see the first block when it has room") {
  auto c = priority_config(2.0, 3, 20000, 31);
  auto trace = run_simulation(c);
  std::size_t below = 0;
  for (std::size_t n = trace.warmup_blocks; n < trace.embedded_chain.size(); ++n) {
    if (trace.embedded_chain[n] < c.beta) ++below;
  }
  CHECK(trace.aligned_probes.kprime.counts[0] == static_cast<double>(below));
  CHECK(trace.aligned_probes.kprime.total + trace.aligned_probes.censored ==
        static_cast<double>(trace.embedded_chain.size() - trace.warmup_blocks));
}

TEST_CASE("sandwicher wraps buy victims and leaves the pool as if unsandwiched") {
  MessagePool pool(0.0);
  pool.insert({.id = 0, .priority = 0.9, .order = cfmm::MarketOrder{5.0}});
  pool.insert({.id = 1, .priority = 0.8, .order = cfmm::MarketOrder{-3.0}});
  pool.insert({.id = 2, .priority = 0.7, .order = cfmm::MarketOrder{2.0}});
  pool.insert({.id = 3, .priority = 0.6});
  auto market = cfmm::CfmmState::from_reserves("cpmm", 1000.0, 1000.0);
  MessageIdSource ids(100);

  auto zero = sandwich_schedule(pool, 10, 0.0, market, ids);
  auto plain = priority_schedule(pool, 10);
  REQUIRE(zero.block.size() == plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(zero.block[i].id == plain[i].id);
  CHECK(zero.victims == 2);
  CHECK(zero.excused_volume == 2);  // a zero budget is spent from the start
  CHECK(zero.violations == 0);

  auto out = sandwich_schedule(pool, 10, 4.0, market, ids);
  CHECK(out.victims == 2);
  CHECK(out.sandwiched == 2);
  CHECK(out.violations == 0);
  CHECK(out.block.size() == 8);
  CHECK(out.profit_b > 0.0);
  auto expected = market;
  for (double a : {5.0, -3.0, 2.0}) expected = cfmm::apply_order(expected, cfmm::MarketOrder{a});
  CHECK(out.pool_after.reserve_a() == doctest::Approx(expected.reserve_a()).epsilon(1e-12));
  CHECK(out.pool_after.reserve_b() == doctest::Approx(expected.reserve_b()).epsilon(1e-12));
  // Sandwich legs bracket their victim in priority order.
  for (std::size_t i = 1; i < out.block.size(); ++i) CHECK(out.block[i - 1].priority > out.block[i].priority);

  auto tight = sandwich_schedule(pool, 5, 4.0, market, ids);
  CHECK(tight.sandwiched == 0);
  CHECK(tight.excused_full == 2);
}

TEST_CASE("sandwicher simulation has no unexcused victims") {
  SimConfig c = priority_config(8.0, 10, 3000, 12);
  c.scheduler = {.kind = SchedulerKind::sandwicher, .budget = 10.0};
  c.orders = {.fraction = 0.5, .max_size = 1.0};
  c.pool = {.rule = "cpmm", .reserve_a = 1e4, .reserve_b = 1e4};
  c.record_messages = false;
  auto trace = run_simulation(c);
  CHECK(trace.sandwich.victims > 1000);
  CHECK(trace.sandwich.sandwiched > 0);
  CHECK(trace.sandwich.violations == 0);
  CHECK(trace.sandwich.unsandwiched_fraction() == 0.0);
  CHECK(trace.sandwich.min_profit_b > 0.0);
}

TEST_CASE("runs are deterministic and replications agree serial vs parallel") {
  auto c = priority_config(2.0, 3, 3000, 99);
  c.orders = {.fraction = 0.3, .max_size = 2.0};
  CHECK(same_trace(run_simulation(c), run_simulation(c)));
  auto serial = run_replications_serial(c, 4);
  auto parallel = run_replications(c, 4, 4);
  REQUIRE(serial.size() == 4);
  for (std::size_t r = 0; r < serial.size(); ++r) CHECK(same_trace(serial[r], parallel[r]));
  CHECK_FALSE(same_trace(serial[0], serial[1]));
}

TEST_CASE("configuration validation") {
  SimConfig c;
  c.beta = 0;
  CHECK_THROWS_AS(run_simulation(c), Error);
  c = SimConfig{};
  c.horizon_blocks = 10;
  c.warmup_blocks = 10;
  CHECK_THROWS_AS(c.validate(), Error);
  c.warmup_blocks.reset();
  c.lambda = 18.0;
  c.beta = 20;
  CHECK(c.effective_warmup() == 100);
  c.scheduler = {.kind = SchedulerKind::naive, .p_inj = 1.5};
  CHECK_THROWS_AS(c.validate(), Error);
}

}
