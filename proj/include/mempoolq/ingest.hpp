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
#include <iosfwd>
#include <string>
#include <vector>

#include "mempoolq/priority_analytics.hpp"
#include "mempoolq/queue_core.hpp"

namespace mempoolq::ingest {

struct BlockDataRow {
  std::int64_t block_number = 0;
  std::int64_t tx_index = 0;
  double priority = 0.0;
};

/// Per-block counts of rows with priority strictly above `threshold`, for every
/// block number from the first to the last present; absent blocks count 0.
///
/// CSV header `block_number,tx_index,priority`. Rows must be sorted by block
/// number, (block_number, tx_index) unique and 0 <= tx_index < beta. Errors are
/// parse errors naming the 1-based line.
std::vector<int> load_blocks(std::istream& in, int beta, double threshold);
std::vector<int> load_blocks(const std::string& path, int beta, double threshold);

/// One frequency with its Wilson 95% interval.
struct Estimate {
  int value = 0;
  std::uint64_t count = 0;
  std::uint64_t trials = 0;
  double probability = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};

struct NDistributionEstimate {
  std::vector<Estimate> below;  // P(N = n), n < beta
  Estimate full;                // P(N >= beta): blocks full of high-priority messages
  std::uint64_t n_blocks = 0;
};

struct TransitionEstimate {
  std::vector<Estimate> below;  // P^{>=beta}_k, k < beta
  Estimate full;                // P^{>=beta}_{>=beta}
  std::uint64_t n_pairs = 0;    // consecutive pairs starting at a full block
};

struct EmpiricalEstimate {
  int beta = 1;
  double threshold = 0.0;
  std::uint64_t n_blocks_used = 0;
  NDistributionEstimate prob_n;
  TransitionEstimate trans;

  /// Transition-form inputs for the analytic pipeline.
  analytics::QueueInputs queue_inputs() const;
};

NDistributionEstimate estimate_n_distribution(const std::vector<int>& counts, int beta);

/// Throws "conditioning event unobserved" when no full block is followed by another block.
TransitionEstimate estimate_transitions(const std::vector<int>& counts, int beta);

EmpiricalEstimate estimate(const std::vector<int>& counts, int beta, double threshold);

/// Confirmed-block CSV of a trace recorded with record_messages, one row per
/// included message (injected ones too), in the load_blocks format.
void write_block_rows(const queue::SimTrace& trace, std::ostream& out);

}  // namespace mempoolq::ingest
