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

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mempoolq/cfmm.hpp"
#include "mempoolq/random.hpp"

namespace mempoolq::queue {

using MessageId = std::uint64_t;

struct Message {
  MessageId id = 0;
  double arrival_time = 0.0;
  double priority = 0.0;
  std::optional<cfmm::MarketOrder> order;
  bool injected = false;
};

using Block = std::vector<Message>;

/// Pending messages, indexed both by arrival (FIFO) and by priority. Counts the
/// messages strictly above a fixed reference priority incrementally.
class MessagePool {
 public:
  explicit MessagePool(double reference_priority = -std::numeric_limits<double>::infinity());
  MessagePool(std::span<const Message> messages,
              double reference_priority = -std::numeric_limits<double>::infinity());

  void insert(const Message& m);
  bool erase(MessageId id);
  bool contains(MessageId id) const { return fifo_.count(id) != 0; }
  const Message& get(MessageId id) const;

  std::size_t size() const noexcept { return fifo_.size(); }
  bool empty() const noexcept { return fifo_.empty(); }
  std::size_t high_count() const noexcept { return high_count_; }
  double reference_priority() const noexcept { return reference_; }

  /// Arrival order (ids are issued in arrival order).
  const std::map<MessageId, Message>& fifo() const noexcept { return fifo_; }
  /// Descending priority; ties broken by id.
  const std::set<std::pair<double, MessageId>, std::greater<>>& by_priority() const noexcept {
    return by_priority_;
  }

 private:
  double reference_;
  std::size_t high_count_ = 0;
  std::map<MessageId, Message> fifo_;
  std::set<std::pair<double, MessageId>, std::greater<>> by_priority_;
};

/// Issues unique message ids; shared by arrivals and injected messages.
class MessageIdSource {
 public:
  explicit MessageIdSource(MessageId first = 0) : next_(first) {}
  MessageId next() noexcept { return next_++; }

 private:
  MessageId next_;
};

/// Priority given to scheduler-injected messages: above every arrival priority.
inline constexpr double kInjectedPriority = 1.0e6;

/// Poisson arrival stream with Uniform[0, 1) priorities. Holding times are
/// i.i.d. exponential with the given rate.
class ArrivalStream {
 public:
  ArrivalStream(double lambda, Rng& rng, MessageIdSource& ids);

  /// Next arrival, or nullopt when lambda == 0.
  std::optional<Message> next();

 private:
  double lambda_;
  double clock_ = 0.0;
  Rng* rng_;
  MessageIdSource* ids_;
};

/// Arrivals on [0, t_end].
std::vector<Message> sample_arrivals(double lambda, double t_end, Rng& rng);

/// Each of the beta positions independently holds an injected message with
/// probability p_inj; other positions take pool messages FIFO while they last.
Block naive_schedule(const MessagePool& pool, int beta, double p_inj, Rng& rng,
                     MessageIdSource& ids);

/// Injected messages, then pool messages above the pool's reference priority,
/// by descending priority up to beta. Remaining capacity is filled with
/// low-priority pool messages in arrival order. The block is in descending
/// priority order. Throws on priority ties among the high-priority candidates or
/// if an injected message does not outrank the whole pool.
Block priority_schedule(const MessagePool& pool, int beta,
                        std::span<const Message> injected = {});

struct SandwichOutcome {
  Block block;
  cfmm::CfmmState pool_after;
  int victims = 0;          // included BUY orders from the pool
  int sandwiched = 0;
  int excused_full = 0;     // unsandwiched, block length >= beta - 1
  int excused_volume = 0;   // unsandwiched, injected volume >= budget
  int violations = 0;       // unsandwiched with neither excuse
  double injected_volume = 0.0;  // sum of front-run sizes
  double profit_b = 0.0;
  double min_profit_b = std::numeric_limits<double>::infinity();  // per sandwich
  int rejected_orders = 0;  // orders skipped because they left the pool domain
};

/// Starts from the priority block and wraps each included BUY order, earliest
/// first, in a memoryless sandwich while two slots remain. The sandwicher's A
/// balance is `budget`; each memoryless sandwich returns its A front-run, so
/// every sandwich uses the full balance. budget == 0 reproduces the priority
/// block.
SandwichOutcome sandwich_schedule(const MessagePool& pool, int beta, double budget,
                                  const cfmm::CfmmState& state, MessageIdSource& ids);

enum class BlockTimeLaw { constant, exponential };
enum class SchedulerKind { naive, priority, sandwicher };

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::priority;
  double p_inj = 0.0;   // naive
  double budget = 0.0;  // sandwicher
};

/// Zero-intelligence order payloads: each arrival carries a market order with
/// probability `fraction`, of uniform direction and size in (0, max_size].
struct OrderFlowConfig {
  double fraction = 0.0;
  double max_size = 1.0;
};

struct PoolConfig {
  std::string rule = "cpmm";
  double reserve_a = 1.0e4;
  double reserve_b = 1.0e4;
};

struct SimConfig {
  double lambda = 1.0;
  double mu = 1.0;
  int beta = 1;
  BlockTimeLaw block_time_law = BlockTimeLaw::exponential;
  SchedulerConfig scheduler;
  std::int64_t horizon_blocks = 1000;
  std::optional<std::int64_t> warmup_blocks;  // default: 10 beta / max(1, beta - lambda/mu)
  std::uint64_t seed = 0;
  /// Messages strictly above this priority count as high priority.
  double reference_priority = 0.0;
  OrderFlowConfig orders;
  PoolConfig pool;
  /// Keep per-block message lists and per-message outcomes. Histograms and
  /// probe statistics are kept either way.
  bool record_messages = true;

  void validate() const;
  std::int64_t effective_warmup() const;
};

struct BlockRecord {
  std::int64_t index = 0;
  double interval = 0.0;
  double time = 0.0;
  std::vector<Message> messages;  // empty unless record_messages
  std::int64_t length = 0;
  std::int64_t pool_size_before = 0;
  std::int64_t high_priority_before = 0;
  std::int64_t high_priority_included = 0;
  std::int64_t injected = 0;
  std::int64_t arrivals = 0;  // arrivals during the interval ending at this block
  int victims = 0;
  int sandwiched = 0;
  int violations = 0;
};

struct MessageOutcome {
  MessageId id = 0;
  double arrival_time = 0.0;
  double priority = 0.0;
  std::int64_t first_block = 0;  // first block produced after arrival
  bool censored = true;
  std::int64_t k_prime = -1;
  std::int64_t k_double_prime = -1;
  std::int64_t k = -1;  // beta k' + k''
};

/// Weighted counts over 0, 1, 2, ...
struct Histogram {
  std::vector<double> counts;
  double total = 0.0;

  void add(std::size_t value, double weight = 1.0);
  std::vector<double> pmf(std::size_t min_size = 0) const;
  double mean() const;
};

/// Outcomes of a phantom tagged message at the reference priority. It never
/// enters the pool; its block is the first with fewer than beta high-priority
/// messages, and its position is that count. "aligned" probes arrive just after
/// every post-warmup block. "time" probes arrive at a uniformly random time,
/// which weights each block by the interval preceding it; by PASTA this is the
/// view of a Poisson arrival.
struct ProbeStats {
  Histogram kprime;
  Histogram kpp_first;
  Histogram kpp_later;
  double censored = 0.0;
};

struct SandwichAudit {
  std::int64_t victims = 0;
  std::int64_t sandwiched = 0;
  std::int64_t excused_full = 0;
  std::int64_t excused_volume = 0;
  std::int64_t violations = 0;
  double profit_b = 0.0;
  double min_profit_b = std::numeric_limits<double>::infinity();

  /// Included victims that were neither sandwiched nor excused.
  double unsandwiched_fraction() const {
    return victims == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(victims);
  }
};

struct SimTrace {
  std::uint64_t seed = 0;
  std::int64_t warmup_blocks = 0;
  std::vector<BlockRecord> blocks;
  std::vector<std::int64_t> embedded_chain;  // high_priority_before per block
  std::vector<MessageOutcome> message_outcomes;  // empty unless record_messages

  Histogram n_hist;  // post-warmup embedded chain
  Histogram injected_hist;
  ProbeStats time_probes;
  ProbeStats aligned_probes;
  /// Real post-warmup arrivals, by their own included position.
  Histogram outcome_kprime;
  Histogram outcome_kpp_first;
  Histogram outcome_kpp_later;
  std::uint64_t censored_messages = 0;

  SandwichAudit sandwich;
  std::int64_t rejected_orders = 0;
  double final_reserve_a = 0.0;
  double final_reserve_b = 0.0;
};

SimTrace run_simulation(const SimConfig& config);

/// Independent replications with seeds derive_seed(config.seed, r). Runs in
/// parallel with OpenMP when threads > 1; results are identical either way.
std::vector<SimTrace> run_replications(const SimConfig& config, int replications,
                                       int threads = 1);

/// Serial reference for run_replications.
std::vector<SimTrace> run_replications_serial(const SimConfig& config, int replications);

}  // namespace mempoolq::queue
