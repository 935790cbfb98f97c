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
#include <sstream>
#include <string>

#include "mempoolq/error.hpp"
#include "mempoolq/ingest.hpp"
#include "mempoolq/priority_analytics.hpp"
#include "mempoolq/queue_core.hpp"
#include "mempoolq/stats.hpp"

using namespace mempoolq;
using namespace mempoolq::ingest;

namespace {

std::vector<int> load(const std::string& csv, int beta, double threshold = 0.0) {
  std::istringstream in(csv);
  return load_blocks(in, beta, threshold);
}

std::string error_of(const std::string& csv, int beta) {
  try {
    load(csv, beta);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    return e.what();
  }
  return {};
}

// Lambda giving chi root p for mu = 1: lambda = (p - p^(beta+1)) / (1 - p).
double lambda_for(double p, int beta) { return (p - std::pow(p, beta + 1)) / (1.0 - p); }

std::vector<int> simulated_counts(double lambda, int beta, std::int64_t blocks, std::uint64_t seed) {
  queue::SimConfig c;
  c.lambda = lambda;
  c.beta = beta;
  c.horizon_blocks = blocks;
  c.seed = seed;
  c.record_messages = false;
  auto trace = queue::run_simulation(c);
  std::vector<int> counts;
  for (std::size_t n = trace.warmup_blocks; n < trace.blocks.size(); ++n) {
    counts.push_back(static_cast<int>(trace.blocks[n].high_priority_included));
  }
  return counts;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("empty input gives no blocks") {
  CHECK(load("", 3).empty());
  CHECK(load("block_number,tx_index,priority\n", 3).empty());
}

TEST_CASE("counts per block at a threshold, with gaps as zero") {
  std::string csv =
      "block_number,tx_index,priority\n"
      "10,0,0.1\n"
      "11,0,0.9\n11,1,0.8\n11,2,0.2\n"
      "12,0,0.9\n12,1,0.8\n12,2,0.7\n"
      "14,0,0.6\n";
  CHECK(load(csv, 3, 0.5) == std::vector<int>{0, 2, 3, 0, 1});
  CHECK(load(csv, 3, 0.0) == std::vector<int>{1, 3, 3, 0, 1});
}

TEST_CASE("malformed rows carry their line number") {
  CHECK(error_of("block_number,tx_index,priority\n1,0,0.5\n1,0,0.7\n", 3).find("line 3") != std::string::npos);
  CHECK(error_of("block_number,tx_index,priority\n2,0,0.5\n1,0,0.7\n", 3).find("not monotone") != std::string::npos);
  CHECK(error_of("block_number,tx_index,priority\n1,3,0.5\n", 3).find("line 2") != std::string::npos);
  CHECK(error_of("block_number,tx_index,priority\n1,0,abc\n", 3).find("priority") != std::string::npos);
  CHECK(error_of("block_number,tx_index,priority\n1,0\n", 3).find("3 fields") != std::string::npos);
  CHECK(error_of("block,index,prio\n", 3).find("header") != std::string::npos);
  CHECK_THROWS_AS(load_blocks(std::string("/nonexistent/file.csv"), 3, 0.0), Error);
}

TEST_CASE("exported traces round trip to the recorded inclusions") {
  queue::SimConfig c;
  c.lambda = 4.0;
  c.beta = 5;
  c.horizon_blocks = 2000;
  c.seed = 3;
  c.reference_priority = 0.25;
  auto trace = queue::run_simulation(c);
  std::stringstream csv;
  write_block_rows(trace, csv);
  auto counts = load_blocks(csv, c.beta, c.reference_priority);
  std::int64_t first = 0;
  while (trace.blocks[first].length == 0) ++first;
  REQUIRE(counts.size() >= 1000);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    REQUIRE(counts[i] == trace.blocks[first + i].high_priority_included);
  }
}

TEST_CASE("all-full blocks") {
  auto n = estimate_n_distribution({3, 3, 3}, 3);
  CHECK(n.full.probability == 1.0);
  for (const auto& e : n.below) CHECK(e.probability == 0.0);
  CHECK_THROWS_AS(estimate_n_distribution({}, 3), Error);
}

TEST_CASE("transitions need an observed full block") {
  CHECK_THROWS_WITH_AS(estimate_transitions({0, 1, 2, 1}, 3), doctest::Contains("conditioning event unobserved"), Error);
  CHECK_THROWS_AS(estimate_transitions({1, 3}, 3), Error);
  auto t = estimate_transitions({3, 1, 3, 3, 0}, 3);
  CHECK(t.n_pairs == 3);
  CHECK(t.below[1].count == 1);
  CHECK(t.below[0].count == 1);
  CHECK(t.full.count == 1);
}

TEST_CASE("estimates from a simulated geometric queue") {
  const int beta = 5;
  const double p = 0.5;
  auto counts = simulated_counts(lambda_for(p, beta), beta, 100000, 41);
  auto e = estimate(counts, beta, 0.0);

  std::vector<double> emp, geo;
  for (int n = 0; n < beta; ++n) {
    emp.push_back(e.prob_n.below[n].probability);
    geo.push_back((1.0 - p) * std::pow(p, n));
  }
  emp.push_back(e.prob_n.full.probability);
  geo.push_back(std::pow(p, beta));
  CHECK(stats::total_variation(emp, geo) < 0.02);

  auto model = analytics::make_model(lambda_for(p, beta), 1.0, beta);
  CHECK(model.p == doctest::Approx(p).epsilon(1e-10));
  auto in = analytics::geometric_inputs(model);
  double below = 0.0;
  for (int k = 0; k < beta; ++k) {
    const auto& est = e.trans.below[k];
    double closed = analytics::transition_prob(in, k);
    CHECK(closed >= est.lower);
    CHECK(closed <= est.upper);
    CHECK(est.lower <= est.probability);
    CHECK(est.probability <= est.upper);
    below += est.probability;
  }
  double direct = static_cast<double>(e.trans.n_pairs - e.trans.full.count) / e.trans.n_pairs;
  CHECK(std::abs(below - direct) <= 1e-15);
  CHECK_NOTHROW(e.queue_inputs());
}

TEST_CASE("Wilson intervals cover at about the nominal rate") {
  const int beta = 5;
  const double p = 0.5;
  queue::SimConfig c;
  c.lambda = lambda_for(p, beta);
  c.beta = beta;
  c.horizon_blocks = 5000;
  c.seed = 555;
  c.record_messages = false;
  auto traces = queue::run_replications(c, 200, 4);
  int covered = 0;
  for (const auto& t : traces) {
    std::vector<int> counts;
    for (std::size_t n = t.warmup_blocks; n < t.blocks.size(); ++n) {
      counts.push_back(static_cast<int>(t.blocks[n].high_priority_included));
    }
    auto est = estimate_n_distribution(counts, beta).below[2];
    double truth = (1.0 - p) * p * p;
    if (est.lower <= truth && truth <= est.upper) ++covered;
  }
  double coverage = covered / 200.0;
  MESSAGE("coverage " << coverage);
  // Binomial noise over 200 runs is about 0.015.
  CHECK(coverage >= 0.90);
  CHECK(coverage <= 0.995);
}

TEST_CASE("relabelling block numbers leaves estimates unchanged") {
  std::string a = "block_number,tx_index,priority\n0,0,1\n0,1,1\n1,0,1\n2,0,1\n2,1,1\n3,0,0\n";
  std::string b = "block_number,tx_index,priority\n700,0,1\n700,1,1\n701,0,1\n702,0,1\n702,1,1\n703,0,0\n";
  auto ea = estimate(load(a, 2), 2, 0.0);
  auto eb = estimate(load(b, 2), 2, 0.0);
  for (int k = 0; k < 2; ++k) {
    CHECK(ea.prob_n.below[k].probability == eb.prob_n.below[k].probability);
    CHECK(ea.trans.below[k].probability == eb.trans.below[k].probability);
  }
}

}
