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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mempoolq/ingest.hpp"
#include "mempoolq/orderflow_mc.hpp"
#include "mempoolq/priority_analytics.hpp"
#include "mempoolq/queue_core.hpp"

namespace mempoolq::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// "%.17g"; locale independent.
std::string format_double(double x);

Json read_json_file(const std::string& path);

/// Checks schema_version and rejects keys outside `allowed`.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

// --- configs ----------------------------------------------------------------

queue::SimConfig sim_config_from_json(const Json& j);
Json to_json(const queue::SimConfig& c);

/// Parameter mode (lambda, mu, beta) or table mode (beta plus prob_n with
/// prob_s or trans_from_full). Ingest output is accepted as is.
struct AnalyticConfig {
  std::optional<double> lambda;
  std::optional<double> mu;
  queue::BlockTimeLaw block_time_law = queue::BlockTimeLaw::exponential;
  int beta = 1;
  std::optional<analytics::QueueInputs> tables;
  std::size_t k_max = 0;  // 0: chosen from the tail mass

  /// Geometric tables for exponential block times, Poisson arrivals per
  /// interval for constant ones, or the given tables.
  analytics::QueueInputs inputs() const;
};
AnalyticConfig analytic_config_from_json(const Json& j);

struct McScenario {
  queue::PoolConfig pool;
  double weight_a = 0.5;  // weighted_product only
  mc::OrderSizeLaw law = mc::OrderSizeLaw::uniform_symmetric(1.0);
  mc::KModel k_model = mc::KModel::zero();
  cfmm::MarketOrder order{1.0};
  mc::McOptions options;
  bool dump_samples = false;
};
McScenario mc_scenario_from_json(const Json& j);

// --- outputs ----------------------------------------------------------------

void write_table_csv(std::ostream& out, const std::vector<double>& probs);
Json table_json(const std::vector<double>& probs);

void write_blocks_csv(std::ostream& out, const queue::SimTrace& trace);
void write_outcomes_csv(std::ostream& out, const queue::SimTrace& trace);
Json histogram_json(const queue::Histogram& h);
Json trace_json(const queue::SimTrace& trace);
Json audit_json(const queue::SandwichAudit& a);

Json to_json(const mc::McReport& r);
void write_samples_csv(std::ostream& out, const mc::McReport& r);

Json to_json(const ingest::EmpiricalEstimate& e);

/// Writes `j` with two-space indent and a trailing newline.
void write_json_file(const std::string& path, const Json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace mempoolq::io
