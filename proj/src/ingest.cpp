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

#include "mempoolq/ingest.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>
#include <tuple>

#include "mempoolq/error.hpp"
#include "mempoolq/stats.hpp"

namespace mempoolq::ingest {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (std::size_t start = 0;;) {
    std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
  throw parse_error("line " + std::to_string(line) + ": " + what);
}

template <class T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    row_error(line, std::string("invalid ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

Estimate make_estimate(int value, std::uint64_t count, std::uint64_t trials) {
  Estimate e;
  e.value = value;
  e.count = count;
  e.trials = trials;
  e.probability = static_cast<double>(count) / static_cast<double>(trials);
  std::tie(e.lower, e.upper) =
      stats::wilson_interval(static_cast<double>(count), static_cast<double>(trials));
  return e;
}

void check_counts(const std::vector<int>& counts, int beta) {
  if (beta < 1) throw validation_error("beta must be >= 1");
  for (int c : counts) {
    if (c < 0 || c > beta) throw validation_error("block counts must lie in [0, beta]");
  }
}

}  // namespace

std::vector<int> load_blocks(std::istream& in, int beta, double threshold) {
  if (beta < 1) throw validation_error("beta must be >= 1");
  std::vector<int> counts;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::int64_t first_block = 0;
  std::int64_t last_block = 0;
  std::set<std::int64_t> indices_in_block;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      auto cols = split(view);
      if (cols.size() != 3 || cols[0] != "block_number" || cols[1] != "tx_index" ||
          cols[2] != "priority") {
        row_error(line_no, "expected header 'block_number,tx_index,priority'");
      }
      header_seen = true;
      continue;
    }
    auto cols = split(view);
    if (cols.size() != 3) row_error(line_no, "expected 3 fields, found " + std::to_string(cols.size()));
    BlockDataRow row{parse_field<std::int64_t>(cols[0], line_no, "block_number"),
                     parse_field<std::int64_t>(cols[1], line_no, "tx_index"),
                     parse_field<double>(cols[2], line_no, "priority")};
    if (row.tx_index < 0 || row.tx_index >= beta) {
      row_error(line_no, "tx_index " + std::to_string(row.tx_index) + " outside [0, beta)");
    }
    if (counts.empty()) {
      first_block = last_block = row.block_number;
      counts.push_back(0);
    } else if (row.block_number < last_block) {
      row_error(line_no, "block numbers not monotone (" + std::to_string(row.block_number) +
                             " after " + std::to_string(last_block) + ")");
    } else if (row.block_number > last_block) {
      counts.resize(static_cast<std::size_t>(row.block_number - first_block) + 1, 0);
      last_block = row.block_number;
      indices_in_block.clear();
    }
    if (!indices_in_block.insert(row.tx_index).second) {
      row_error(line_no, "duplicate (block_number, tx_index) = (" +
                             std::to_string(row.block_number) + ", " +
                             std::to_string(row.tx_index) + ")");
    }
    if (row.priority > threshold) ++counts.back();
  }
  if (in.bad()) throw parse_error("read failure");
  return counts;
}

std::vector<int> load_blocks(const std::string& path, int beta, double threshold) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return load_blocks(in, beta, threshold);
}

NDistributionEstimate estimate_n_distribution(const std::vector<int>& counts, int beta) {
  check_counts(counts, beta);
  if (counts.empty()) throw validation_error("no blocks to estimate from");
  std::vector<std::uint64_t> freq(static_cast<std::size_t>(beta) + 1, 0);
  for (int c : counts) ++freq[c];
  NDistributionEstimate out;
  out.n_blocks = counts.size();
  for (int n = 0; n < beta; ++n) out.below.push_back(make_estimate(n, freq[n], out.n_blocks));
  out.full = make_estimate(beta, freq[beta], out.n_blocks);
  return out;
}

TransitionEstimate estimate_transitions(const std::vector<int>& counts, int beta) {
  check_counts(counts, beta);
  std::vector<std::uint64_t> freq(static_cast<std::size_t>(beta) + 1, 0);
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
    if (counts[i] != beta) continue;
    ++freq[counts[i + 1]];
    ++pairs;
  }
  if (pairs == 0) throw validation_error("conditioning event unobserved: no full block followed by another block");
  TransitionEstimate out;
  out.n_pairs = pairs;
  for (int k = 0; k < beta; ++k) out.below.push_back(make_estimate(k, freq[k], pairs));
  out.full = make_estimate(beta, freq[beta], pairs);
  return out;
}

EmpiricalEstimate estimate(const std::vector<int>& counts, int beta, double threshold) {
  EmpiricalEstimate e;
  e.beta = beta;
  e.threshold = threshold;
  e.prob_n = estimate_n_distribution(counts, beta);
  e.trans = estimate_transitions(counts, beta);
  e.n_blocks_used = e.prob_n.n_blocks;
  return e;
}

analytics::QueueInputs EmpiricalEstimate::queue_inputs() const {
  analytics::QueueInputs in;
  in.beta = beta;
  for (const auto& e : prob_n.below) in.prob_n.push_back(e.probability);
  for (const auto& e : trans.below) in.trans_from_full.push_back(e.probability);
  in.validate();
  return in;
}

void write_block_rows(const queue::SimTrace& trace, std::ostream& out) {
  out << "block_number,tx_index,priority\n";
  char buf[64];
  for (const auto& b : trace.blocks) {
    if (b.length > 0 && b.messages.empty()) {
      throw validation_error("trace was recorded without messages");
    }
    for (std::size_t i = 0; i < b.messages.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", b.messages[i].priority);
      out << b.index << ',' << i << ',' << buf << '\n';
    }
  }
}

}  // namespace mempoolq::ingest
