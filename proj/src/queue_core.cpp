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

#include "mempoolq/queue_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mempoolq/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mempoolq::queue {

namespace {

double exponential(Rng& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

bool fits_and_apply(cfmm::CfmmState& state, const cfmm::MarketOrder& order) {
  if (!cfmm::order_fits(state, order)) return false;
  state = cfmm::apply_order(state, order);
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// MessagePool

MessagePool::MessagePool(double reference_priority) : reference_(reference_priority) {}

MessagePool::MessagePool(std::span<const Message> messages, double reference_priority)
    : reference_(reference_priority) {
  for (const auto& m : messages) insert(m);
}

void MessagePool::insert(const Message& m) {
  auto [it, inserted] = fifo_.emplace(m.id, m);
  if (!inserted) throw validation_error("duplicate message id " + std::to_string(m.id));
  by_priority_.emplace(m.priority, m.id);
  if (m.priority > reference_) ++high_count_;
}

bool MessagePool::erase(MessageId id) {
  auto it = fifo_.find(id);
  if (it == fifo_.end()) return false;
  by_priority_.erase({it->second.priority, id});
  if (it->second.priority > reference_) --high_count_;
  fifo_.erase(it);
  return true;
}

const Message& MessagePool::get(MessageId id) const {
  auto it = fifo_.find(id);
  if (it == fifo_.end()) throw validation_error("message " + std::to_string(id) + " not in pool");
  return it->second;
}

// ---------------------------------------------------------------------------
// Arrivals

ArrivalStream::ArrivalStream(double lambda, Rng& rng, MessageIdSource& ids)
    : lambda_(lambda), rng_(&rng), ids_(&ids) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw validation_error("lambda must be >= 0");
}

std::optional<Message> ArrivalStream::next() {
  if (lambda_ == 0.0) return std::nullopt;
  clock_ += exponential(*rng_, lambda_);
  Message m;
  m.id = ids_->next();
  m.arrival_time = clock_;
  m.priority = uniform01(*rng_);
  return m;
}

std::vector<Message> sample_arrivals(double lambda, double t_end, Rng& rng) {
  if (!(t_end >= 0.0)) throw validation_error("t_end must be >= 0");
  MessageIdSource ids;
  ArrivalStream stream(lambda, rng, ids);
  std::vector<Message> out;
  for (auto m = stream.next(); m && m->arrival_time <= t_end; m = stream.next()) {
    out.push_back(*m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schedulers

Block naive_schedule(const MessagePool& pool, int beta, double p_inj, Rng& rng,
                     MessageIdSource& ids) {
  if (beta < 1) throw validation_error("beta must be >= 1");
  if (!(p_inj >= 0.0 && p_inj <= 1.0)) throw validation_error("p_inj must lie in [0, 1]");
  Block block;
  auto next_pool = pool.fifo().begin();
  for (int pos = 0; pos < beta; ++pos) {
    // One draw per position regardless of outcome keeps the stream aligned.
    bool inject = uniform01(rng) < p_inj;
    if (inject) {
      Message m;
      m.id = ids.next();
      m.priority = kInjectedPriority;
      m.injected = true;
      block.push_back(m);
    } else if (next_pool != pool.fifo().end()) {
      block.push_back(next_pool->second);
      ++next_pool;
    }
  }
  return block;
}

Block priority_schedule(const MessagePool& pool, int beta, std::span<const Message> injected) {
  if (beta < 1) throw validation_error("beta must be >= 1");
  std::vector<Message> extra(injected.begin(), injected.end());
  std::sort(extra.begin(), extra.end(),
            [](const Message& a, const Message& b) { return a.priority > b.priority; });
  if (!extra.empty() && !pool.empty() &&
      !(extra.back().priority > pool.by_priority().begin()->first)) {
    throw validation_error("injected messages must outrank every pool message");
  }

  // beta + 1 candidates so a tie straddling the cut is also caught.
  const auto cap = static_cast<std::size_t>(beta);
  const double ref = pool.reference_priority();
  std::vector<Message> candidates;
  candidates.reserve(cap + 1);
  for (const auto& m : extra) {
    if (candidates.size() > cap) break;
    candidates.push_back(m);
  }
  for (auto it = pool.by_priority().begin();
       it != pool.by_priority().end() && candidates.size() <= cap && it->first > ref; ++it) {
    candidates.push_back(pool.get(it->second));
  }
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].priority == candidates[i - 1].priority) {
      throw validation_error("priority tie between messages " +
                             std::to_string(candidates[i - 1].id) + " and " +
                             std::to_string(candidates[i].id));
    }
  }
  if (candidates.size() > cap) candidates.resize(cap);

  // Leftover capacity takes low-priority messages in arrival order.
  std::size_t first_low = candidates.size();
  for (auto it = pool.fifo().begin(); it != pool.fifo().end() && candidates.size() < cap; ++it) {
    if (!(it->second.priority > ref)) candidates.push_back(it->second);
  }
  std::stable_sort(candidates.begin() + static_cast<std::ptrdiff_t>(first_low), candidates.end(),
                   [](const Message& a, const Message& b) { return a.priority > b.priority; });
  return candidates;
}

SandwichOutcome sandwich_schedule(const MessagePool& pool, int beta, double budget,
                                  const cfmm::CfmmState& state, MessageIdSource& ids) {
  if (!(budget >= 0.0)) throw validation_error("sandwich budget must be >= 0");
  Block base = priority_schedule(pool, beta);

  SandwichOutcome out{.block = {}, .pool_after = state};
  cfmm::CfmmState& s = out.pool_after;
  int free_slots = beta - static_cast<int>(base.size());
  int unsandwiched = 0;

  for (const auto& m : base) {
    bool victim = m.order && m.order->is_buy() && !m.injected;
    if (!victim) {
      out.block.push_back(m);
      if (m.order && !fits_and_apply(s, *m.order)) ++out.rejected_orders;
      continue;
    }
    ++out.victims;
    if (budget > 0.0 && free_slots >= 2) {
      auto triple = cfmm::memoryless_sandwich(*m.order, budget);
      cfmm::MarketOrder front{triple.tau_minus}, back{triple.tau_plus};
      bool fits = cfmm::order_fits(s, front);
      if (fits) {
        auto s1 = cfmm::apply_order(s, front);
        fits = cfmm::order_fits(s1, triple.tau_0) &&
               cfmm::order_fits(cfmm::apply_order(s1, triple.tau_0), back);
      }
      if (fits) {
        double gain = cfmm::memoryless_sandwich_payoff(s, m.order->signed_amount, budget)[1];
        out.profit_b += gain;
        out.min_profit_b = std::min(out.min_profit_b, gain);
        Message lead{.id = ids.next(), .arrival_time = m.arrival_time,
                     .priority = std::nextafter(m.priority, kInjectedPriority),
                     .order = front, .injected = true};
        Message tail{.id = ids.next(), .arrival_time = m.arrival_time,
                     .priority = std::nextafter(m.priority, -kInjectedPriority),
                     .order = back, .injected = true};
        out.block.push_back(lead);
        out.block.push_back(m);
        out.block.push_back(tail);
        s = cfmm::apply_sandwich(s, triple);
        free_slots -= 2;
        out.injected_volume += budget;
        ++out.sandwiched;
        continue;
      }
    }
    out.block.push_back(m);
    if (!fits_and_apply(s, *m.order)) ++out.rejected_orders;
    ++unsandwiched;
  }

  // Event audit on the emitted block.
  bool long_block = static_cast<int>(out.block.size()) >= beta - 1;
  bool volume_spent = out.injected_volume >= budget;
  for (int i = 0; i < unsandwiched; ++i) {
    if (long_block) {
      ++out.excused_full;
    } else if (volume_spent) {
      ++out.excused_volume;
    } else {
      ++out.violations;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

void SimConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw validation_error("lambda must be >= 0");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw validation_error("mu must be > 0");
  if (beta < 1) throw validation_error("beta must be >= 1");
  if (horizon_blocks < 1) throw validation_error("horizon_blocks must be >= 1");
  std::int64_t warm = effective_warmup();
  if (warm < 0 || warm >= horizon_blocks) {
    throw validation_error("need horizon_blocks > warmup_blocks >= 0");
  }
  if (scheduler.kind == SchedulerKind::naive && !(scheduler.p_inj >= 0.0 && scheduler.p_inj <= 1.0)) {
    throw validation_error("p_inj must lie in [0, 1]");
  }
  if (scheduler.kind == SchedulerKind::sandwicher && !(scheduler.budget >= 0.0)) {
    throw validation_error("sandwich budget must be >= 0");
  }
  if (!(orders.fraction >= 0.0 && orders.fraction <= 1.0)) {
    throw validation_error("orders.fraction must lie in [0, 1]");
  }
  if (!(orders.max_size > 0.0)) throw validation_error("orders.max_size must be > 0");
  cfmm::make_rule(pool.rule, pool.reserve_a, pool.reserve_b);
}

std::int64_t SimConfig::effective_warmup() const {
  if (warmup_blocks) return *warmup_blocks;
  double slack = std::max(1.0, beta - lambda / mu);
  return static_cast<std::int64_t>(std::ceil(10.0 * beta / slack));
}

// ---------------------------------------------------------------------------
// Histogram

void Histogram::add(std::size_t value, double weight) {
  if (!(weight > 0.0)) return;
  if (counts.size() <= value) counts.resize(value + 1, 0);
  counts[value] += weight;
  total += weight;
}

std::vector<double> Histogram::pmf(std::size_t min_size) const {
  std::vector<double> out(std::max(min_size, counts.size()), 0.0);
  if (total == 0.0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = counts[i] / total;
  }
  return out;
}

double Histogram::mean() const {
  if (total == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) s += static_cast<double>(i) * counts[i];
  return s / total;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

void fill_probes(SimTrace& trace, int beta) {
  const auto& chain = trace.embedded_chain;
  const auto h = static_cast<std::int64_t>(chain.size());
  // next_open[n]: first block m >= n with fewer than beta high-priority messages.
  std::vector<std::int64_t> next_open(chain.size() + 1, -1);
  for (std::int64_t n = h - 1; n >= 0; --n) {
    next_open[n] = chain[n] < beta ? n : next_open[n + 1];
  }
  auto record = [&](ProbeStats& probes, std::int64_t n, double weight) {
    std::int64_t m = next_open[n];
    if (m < 0) {
      probes.censored += weight;
      return;
    }
    auto kprime = static_cast<std::size_t>(m - n);
    auto pos = static_cast<std::size_t>(chain[m]);
    probes.kprime.add(kprime, weight);
    (kprime == 0 ? probes.kpp_first : probes.kpp_later).add(pos, weight);
  };
  for (std::int64_t n = trace.warmup_blocks; n < h; ++n) {
    record(trace.aligned_probes, n, 1.0);
    record(trace.time_probes, n, trace.blocks[n].interval);
  }
}

}  // namespace

SimTrace run_simulation(const SimConfig& config) {
  config.validate();
  SimTrace trace;
  trace.seed = config.seed;
  trace.warmup_blocks = config.effective_warmup();
  trace.blocks.reserve(static_cast<std::size_t>(config.horizon_blocks));
  trace.embedded_chain.reserve(static_cast<std::size_t>(config.horizon_blocks));

  Rng arrival_rng = make_rng(config.seed, 0);
  Rng block_rng = make_rng(config.seed, 1);
  Rng order_rng = make_rng(config.seed, 2);
  Rng scheduler_rng = make_rng(config.seed, 3);

  MessageIdSource ids;
  ArrivalStream stream(config.lambda, arrival_rng, ids);
  MessagePool pool(config.reference_priority);
  cfmm::CfmmState market =
      cfmm::CfmmState::from_reserves(config.pool.rule, config.pool.reserve_a, config.pool.reserve_b);
  std::vector<double> block_times;
  block_times.reserve(static_cast<std::size_t>(config.horizon_blocks));

  auto attach_order = [&](Message& m) {
    if (config.orders.fraction <= 0.0) return;
    double u = uniform01(order_rng);
    double size = config.orders.max_size * (1.0 - uniform01(order_rng));
    double direction = uniform01(order_rng) < 0.5 ? 1.0 : -1.0;
    if (u < config.orders.fraction) m.order = cfmm::MarketOrder{direction * size};
  };

  auto first_block_of = [&](double arrival_time) {
    auto it = std::lower_bound(block_times.begin(), block_times.end(), arrival_time);
    return static_cast<std::int64_t>(it - block_times.begin());
  };

  auto record_outcome = [&](const Message& m, std::int64_t block, std::int64_t pos) {
    std::int64_t first = first_block_of(m.arrival_time);
    bool counted = first >= trace.warmup_blocks;
    MessageOutcome o{.id = m.id, .arrival_time = m.arrival_time, .priority = m.priority,
                     .first_block = first};
    if (block >= 0) {
      o.censored = false;
      o.k_prime = block - first;
      o.k_double_prime = pos;
      o.k = config.beta * o.k_prime + pos;
      if (counted) {
        trace.outcome_kprime.add(static_cast<std::size_t>(o.k_prime));
        (o.k_prime == 0 ? trace.outcome_kpp_first : trace.outcome_kpp_later)
            .add(static_cast<std::size_t>(pos));
      }
    } else if (counted) {
      ++trace.censored_messages;
    }
    if (config.record_messages) trace.message_outcomes.push_back(o);
  };

  std::optional<Message> pending = stream.next();
  if (pending) attach_order(*pending);
  double clock = 0.0;

  for (std::int64_t n = 0; n < config.horizon_blocks; ++n) {
    double interval = config.block_time_law == BlockTimeLaw::constant
                          ? 1.0 / config.mu
                          : exponential(block_rng, config.mu);
    clock += interval;
    block_times.push_back(clock);

    BlockRecord rec;
    rec.index = n;
    rec.interval = interval;
    rec.time = clock;
    while (pending && pending->arrival_time <= clock) {
      pool.insert(*pending);
      ++rec.arrivals;
      pending = stream.next();
      if (pending) attach_order(*pending);
    }
    rec.pool_size_before = static_cast<std::int64_t>(pool.size());
    rec.high_priority_before = static_cast<std::int64_t>(pool.high_count());

    Block block;
    switch (config.scheduler.kind) {
      case SchedulerKind::naive:
        block = naive_schedule(pool, config.beta, config.scheduler.p_inj, scheduler_rng, ids);
        break;
      case SchedulerKind::priority:
        block = priority_schedule(pool, config.beta);
        break;
      case SchedulerKind::sandwicher: {
        auto out = sandwich_schedule(pool, config.beta, config.scheduler.budget, market, ids);
        block = std::move(out.block);
        market = out.pool_after;
        trace.rejected_orders += out.rejected_orders;
        rec.victims = out.victims;
        rec.sandwiched = out.sandwiched;
        rec.violations = out.violations;
        auto& audit = trace.sandwich;
        audit.victims += out.victims;
        audit.sandwiched += out.sandwiched;
        audit.excused_full += out.excused_full;
        audit.excused_volume += out.excused_volume;
        audit.violations += out.violations;
        audit.profit_b += out.profit_b;
        audit.min_profit_b = std::min(audit.min_profit_b, out.min_profit_b);
        break;
      }
    }
    if (config.scheduler.kind != SchedulerKind::sandwicher) {
      for (const auto& m : block) {
        if (m.order && !fits_and_apply(market, *m.order)) ++trace.rejected_orders;
      }
    }

    rec.length = static_cast<std::int64_t>(block.size());
    for (std::size_t pos = 0; pos < block.size(); ++pos) {
      const Message& m = block[pos];
      if (m.priority > config.reference_priority) ++rec.high_priority_included;
      if (m.injected) {
        ++rec.injected;
        continue;
      }
      if (!pool.erase(m.id)) throw numerical_error("scheduled message missing from the pool");
      record_outcome(m, n, static_cast<std::int64_t>(pos));
    }
    if (n >= trace.warmup_blocks) {
      trace.n_hist.add(static_cast<std::size_t>(rec.high_priority_before));
      trace.injected_hist.add(static_cast<std::size_t>(rec.injected));
    }
    if (config.record_messages) rec.messages = std::move(block);
    trace.embedded_chain.push_back(rec.high_priority_before);
    trace.blocks.push_back(std::move(rec));
  }

  for (const auto& [id, m] : pool.fifo()) record_outcome(m, -1, -1);
  if (config.record_messages) {
    std::sort(trace.message_outcomes.begin(), trace.message_outcomes.end(),
              [](const MessageOutcome& a, const MessageOutcome& b) { return a.id < b.id; });
  }
  fill_probes(trace, config.beta);
  trace.final_reserve_a = market.reserve_a();
  trace.final_reserve_b = market.reserve_b();
  return trace;
}

std::vector<SimTrace> run_replications_serial(const SimConfig& config, int replications) {
  std::vector<SimTrace> out(static_cast<std::size_t>(std::max(replications, 0)));
  for (int r = 0; r < replications; ++r) {
    SimConfig c = config;
    c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    out[r] = run_simulation(c);
  }
  return out;
}

std::vector<SimTrace> run_replications(const SimConfig& config, int replications, int threads) {
  config.validate();
  std::vector<SimTrace> out(static_cast<std::size_t>(std::max(replications, 0)));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(threads, 1))
#endif
  for (int r = 0; r < replications; ++r) {
    SimConfig c = config;
    c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    out[r] = run_simulation(c);
  }
  (void)threads;
  return out;
}

}  // namespace mempoolq::queue
