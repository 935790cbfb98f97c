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

#include <benchmark/benchmark.h>

#include "mempoolq/orderflow_mc.hpp"
#include "mempoolq/queue_core.hpp"

using namespace mempoolq;

namespace {

mc::McOptions mc_options(int threads) {
  mc::McOptions o;
  o.n_samples = 20000;
  o.seed = 1;
  o.threads = threads;
  return o;
}

const cfmm::CfmmState& pool() {
  static const auto p = cfmm::CfmmState::from_reserves("cpmm", 100.0, 100.0);
  return p;
}

void BM_McSerial(benchmark::State& state) {
  auto law = mc::OrderSizeLaw::uniform_symmetric(1.0);
  auto k = mc::KModel::priority(30.0, 1.0, 200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc::mc_execution_price_serial(pool(), law, k, cfmm::MarketOrder{1.0}, mc_options(1)));
  }
}

void BM_McParallel(benchmark::State& state) {
  auto law = mc::OrderSizeLaw::uniform_symmetric(1.0);
  auto k = mc::KModel::priority(30.0, 1.0, 200);
  auto o = mc_options(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc::mc_execution_price(pool(), law, k, cfmm::MarketOrder{1.0}, o));
  }
}

queue::SimConfig sim_config() {
  queue::SimConfig c;
  c.lambda = 2.5;
  c.beta = 5;
  c.horizon_blocks = 5000;
  c.seed = 3;
  c.record_messages = false;
  return c;
}

void BM_ReplicationsSerial(benchmark::State& state) {
  auto c = sim_config();
  for (auto _ : state) benchmark::DoNotOptimize(queue::run_replications_serial(c, 16));
}

void BM_ReplicationsParallel(benchmark::State& state) {
  auto c = sim_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(queue::run_replications(c, 16, static_cast<int>(state.range(0))));
  }
}

}  // namespace

BENCHMARK(BM_McSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
