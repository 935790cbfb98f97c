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

#include "mempoolq/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "mempoolq/error.hpp"

namespace mempoolq::io {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw parse_error(where + ": expected a JSON object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw parse_error(where + ": unknown key '" + key + "'");
  }
}

namespace {

void check_schema(const Json& j, const std::string& where) {
  if (!j.is_object()) throw parse_error(where + ": expected a JSON object");
  if (!j.contains("schema_version")) throw parse_error(where + ": missing schema_version");
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
    throw parse_error(where + ": unsupported schema_version (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
}

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw parse_error(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw parse_error(where + ": wrong type for '" + key + "'");
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

queue::BlockTimeLaw parse_block_time(const std::string& s, const std::string& where) {
  if (s == "exponential") return queue::BlockTimeLaw::exponential;
  if (s == "constant") return queue::BlockTimeLaw::constant;
  throw parse_error(where + ": block_time must be 'exponential' or 'constant'");
}

const char* block_time_name(queue::BlockTimeLaw law) {
  return law == queue::BlockTimeLaw::constant ? "constant" : "exponential";
}

const char* scheduler_name(queue::SchedulerKind k) {
  switch (k) {
    case queue::SchedulerKind::naive: return "naive";
    case queue::SchedulerKind::priority: return "priority";
    case queue::SchedulerKind::sandwicher: return "sandwicher";
  }
  return "priority";
}

queue::PoolConfig pool_from_json(const Json& j, const std::string& where, double* weight_a) {
  check_keys(j, {"rule", "reserve_a", "reserve_b", "weight_a"}, where);
  queue::PoolConfig p;
  p.rule = get_or<std::string>(j, "rule", p.rule, where);
  p.reserve_a = get_or<double>(j, "reserve_a", p.reserve_a, where);
  p.reserve_b = get_or<double>(j, "reserve_b", p.reserve_b, where);
  if (j.contains("weight_a")) {
    if (!weight_a) throw parse_error(where + ": weight_a not supported here");
    *weight_a = get<double>(j, "weight_a", where);
  }
  return p;
}

std::vector<double> number_list(const Json& j, const char* key, const std::string& where) {
  auto v = get<std::vector<double>>(j, key, where);
  return v;
}

}  // namespace

// --- configs ----------------------------------------------------------------

queue::SimConfig sim_config_from_json(const Json& j) {
  const std::string where = "simulation config";
  check_schema(j, where);
  check_keys(j,
             {"schema_version", "lambda", "mu", "beta", "block_time", "scheduler",
              "horizon_blocks", "warmup_blocks", "seed", "reference_priority", "orders", "pool",
              "record_messages"},
             where);
  queue::SimConfig c;
  c.lambda = get<double>(j, "lambda", where);
  c.mu = get<double>(j, "mu", where);
  c.beta = get<int>(j, "beta", where);
  c.block_time_law = parse_block_time(get_or<std::string>(j, "block_time", "exponential", where), where);
  if (j.contains("scheduler")) {
    const auto& s = j["scheduler"];
    const std::string sw = where + ".scheduler";
    check_keys(s, {"kind", "p_inj", "budget"}, sw);
    auto kind = get<std::string>(s, "kind", sw);
    if (kind == "naive") {
      c.scheduler.kind = queue::SchedulerKind::naive;
    } else if (kind == "priority") {
      c.scheduler.kind = queue::SchedulerKind::priority;
    } else if (kind == "sandwicher") {
      c.scheduler.kind = queue::SchedulerKind::sandwicher;
    } else {
      throw parse_error(sw + ": kind must be 'naive', 'priority' or 'sandwicher'");
    }
    c.scheduler.p_inj = get_or<double>(s, "p_inj", 0.0, sw);
    c.scheduler.budget = get_or<double>(s, "budget", 0.0, sw);
  }
  c.horizon_blocks = get_or<std::int64_t>(j, "horizon_blocks", c.horizon_blocks, where);
  if (j.contains("warmup_blocks")) c.warmup_blocks = get<std::int64_t>(j, "warmup_blocks", where);
  c.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  c.reference_priority = get_or<double>(j, "reference_priority", c.reference_priority, where);
  if (j.contains("orders")) {
    const auto& o = j["orders"];
    const std::string ow = where + ".orders";
    check_keys(o, {"fraction", "max_size"}, ow);
    c.orders.fraction = get_or<double>(o, "fraction", c.orders.fraction, ow);
    c.orders.max_size = get_or<double>(o, "max_size", c.orders.max_size, ow);
  }
  if (j.contains("pool")) c.pool = pool_from_json(j["pool"], where + ".pool", nullptr);
  c.record_messages = get_or<bool>(j, "record_messages", c.record_messages, where);
  return c;
}

Json to_json(const queue::SimConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["lambda"] = c.lambda;
  j["mu"] = c.mu;
  j["beta"] = c.beta;
  j["block_time"] = block_time_name(c.block_time_law);
  j["scheduler"] = {{"kind", scheduler_name(c.scheduler.kind)},
                    {"p_inj", c.scheduler.p_inj},
                    {"budget", c.scheduler.budget}};
  j["horizon_blocks"] = c.horizon_blocks;
  j["warmup_blocks"] = c.effective_warmup();
  j["seed"] = c.seed;
  j["reference_priority"] = c.reference_priority;
  j["orders"] = {{"fraction", c.orders.fraction}, {"max_size", c.orders.max_size}};
  j["pool"] = {{"rule", c.pool.rule}, {"reserve_a", c.pool.reserve_a}, {"reserve_b", c.pool.reserve_b}};
  j["record_messages"] = c.record_messages;
  return j;
}

analytics::QueueInputs AnalyticConfig::inputs() const {
  if (tables) return *tables;
  if (block_time_law == queue::BlockTimeLaw::constant) {
    return analytics::constant_block_time_inputs(*lambda, 1.0 / *mu, beta);
  }
  return analytics::geometric_inputs(analytics::make_model(*lambda, *mu, beta));
}

AnalyticConfig analytic_config_from_json(const Json& j) {
  const std::string where = "analytic config";
  check_schema(j, where);
  check_keys(j,
             {"schema_version", "lambda", "mu", "beta", "block_time", "k_max", "prob_n", "prob_s",
              "trans_from_full", "estimate"},
             where);
  AnalyticConfig c;
  c.beta = get<int>(j, "beta", where);
  c.k_max = get_or<std::size_t>(j, "k_max", 0, where);
  bool params = j.contains("lambda") || j.contains("mu");
  bool tables = j.contains("prob_n") || j.contains("prob_s") || j.contains("trans_from_full");
  if (params == tables) {
    throw parse_error(where + ": give either lambda and mu or probability tables");
  }
  if (params) {
    c.lambda = get<double>(j, "lambda", where);
    c.mu = get<double>(j, "mu", where);
    c.block_time_law = parse_block_time(get_or<std::string>(j, "block_time", "exponential", where), where);
    analytics::make_model(*c.lambda, *c.mu, c.beta);  // validates and checks stability
  } else {
    if (j.contains("block_time")) throw parse_error(where + ": block_time needs lambda and mu");
    analytics::QueueInputs in;
    in.beta = c.beta;
    in.prob_n = number_list(j, "prob_n", where);
    if (j.contains("prob_s")) in.prob_s = number_list(j, "prob_s", where);
    if (j.contains("trans_from_full")) in.trans_from_full = number_list(j, "trans_from_full", where);
    if (in.prob_s.empty() == in.trans_from_full.empty()) {
      throw parse_error(where + ": give exactly one of prob_s and trans_from_full");
    }
    in.validate();
    c.tables = std::move(in);
  }
  return c;
}

McScenario mc_scenario_from_json(const Json& j) {
  const std::string where = "mc scenario";
  check_schema(j, where);
  check_keys(j,
             {"schema_version", "pool", "law", "k_model", "order", "n_samples", "seed",
              "chebyshev_k", "dump_samples"},
             where);
  McScenario s;
  if (j.contains("pool")) s.pool = pool_from_json(j["pool"], where + ".pool", &s.weight_a);

  if (j.contains("law")) {
    const auto& l = j["law"];
    const std::string lw = where + ".law";
    check_keys(l, {"kind", "max_size", "sizes"}, lw);
    auto kind = get<std::string>(l, "kind", lw);
    if (kind == "uniform_symmetric") {
      s.law = mc::OrderSizeLaw::uniform_symmetric(get<double>(l, "max_size", lw));
    } else if (kind == "empirical") {
      s.law = mc::OrderSizeLaw::empirical(number_list(l, "sizes", lw));
    } else {
      throw parse_error(lw + ": kind must be 'uniform_symmetric' or 'empirical'");
    }
  }

  if (j.contains("k_model")) {
    const auto& k = j["k_model"];
    const std::string kw = where + ".k_model";
    check_keys(k, {"kind", "p", "lambda", "mu", "beta", "probs"}, kw);
    auto kind = get<std::string>(k, "kind", kw);
    if (kind == "zero") {
      s.k_model = mc::KModel::zero();
    } else if (kind == "geometric") {
      s.k_model = mc::KModel::geometric(get<double>(k, "p", kw));
    } else if (kind == "priority") {
      s.k_model = mc::KModel::priority(get<double>(k, "lambda", kw), get<double>(k, "mu", kw),
                                       get<int>(k, "beta", kw));
    } else if (kind == "table") {
      s.k_model = mc::KModel::table(number_list(k, "probs", kw));
    } else {
      throw parse_error(kw + ": kind must be 'zero', 'geometric', 'priority' or 'table'");
    }
  }

  s.order = cfmm::MarketOrder{get_or<double>(j, "order", 1.0, where)};
  s.options.n_samples = get_or<std::size_t>(j, "n_samples", s.options.n_samples, where);
  s.options.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  if (j.contains("chebyshev_k")) s.options.chebyshev_k = number_list(j, "chebyshev_k", where);
  s.dump_samples = get_or<bool>(j, "dump_samples", false, where);
  s.options.keep_samples = s.dump_samples;
  return s;
}

// --- outputs ----------------------------------------------------------------

void write_table_csv(std::ostream& out, const std::vector<double>& probs) {
  out << "k,probability\n";
  for (std::size_t k = 0; k < probs.size(); ++k) out << k << ',' << format_double(probs[k]) << '\n';
}

Json table_json(const std::vector<double>& probs) {
  Json arr = Json::array();
  for (double v : probs) arr.push_back(v);
  return arr;
}

void write_blocks_csv(std::ostream& out, const queue::SimTrace& trace) {
  out << "index,time,interval,length,pool_size_before,high_priority_before,"
         "high_priority_included,injected,arrivals,victims,sandwiched,violations\n";
  for (const auto& b : trace.blocks) {
    out << b.index << ',' << format_double(b.time) << ',' << format_double(b.interval) << ','
        << b.length << ',' << b.pool_size_before << ',' << b.high_priority_before << ','
        << b.high_priority_included << ',' << b.injected << ',' << b.arrivals << ',' << b.victims
        << ',' << b.sandwiched << ',' << b.violations << '\n';
  }
}

void write_outcomes_csv(std::ostream& out, const queue::SimTrace& trace) {
  out << "id,arrival_time,priority,first_block,censored,k_prime,k_double_prime,k\n";
  for (const auto& o : trace.message_outcomes) {
    out << o.id << ',' << format_double(o.arrival_time) << ',' << format_double(o.priority) << ','
        << o.first_block << ',' << (o.censored ? 1 : 0) << ',' << o.k_prime << ','
        << o.k_double_prime << ',' << o.k << '\n';
  }
}

Json histogram_json(const queue::Histogram& h) {
  return {{"total", h.total}, {"mean", h.mean()}, {"counts", table_json(h.counts)},
          {"pmf", table_json(h.pmf())}};
}

namespace {

Json probes_json(const queue::ProbeStats& p) {
  return {{"kprime", histogram_json(p.kprime)},
          {"kpp_first", histogram_json(p.kpp_first)},
          {"kpp_later", histogram_json(p.kpp_later)},
          {"censored", p.censored}};
}

}  // namespace

Json audit_json(const queue::SandwichAudit& a) {
  Json j = {{"victims", a.victims},
            {"sandwiched", a.sandwiched},
            {"excused_full", a.excused_full},
            {"excused_volume", a.excused_volume},
            {"violations", a.violations},
            {"unsandwiched_fraction", a.unsandwiched_fraction()},
            {"profit_b", a.profit_b}};
  if (a.sandwiched > 0) {
    j["min_profit_b"] = a.min_profit_b;
  } else {
    j["min_profit_b"] = nullptr;
  }
  return j;
}

Json trace_json(const queue::SimTrace& trace) {
  Json blocks = Json::array();
  for (const auto& b : trace.blocks) {
    Json ids = Json::array();
    for (const auto& m : b.messages) ids.push_back(m.id);
    blocks.push_back({{"index", b.index},
                      {"time", b.time},
                      {"interval", b.interval},
                      {"length", b.length},
                      {"pool_size_before", b.pool_size_before},
                      {"high_priority_before", b.high_priority_before},
                      {"high_priority_included", b.high_priority_included},
                      {"injected", b.injected},
                      {"arrivals", b.arrivals},
                      {"message_ids", ids}});
  }
  Json outcomes = Json::array();
  for (const auto& o : trace.message_outcomes) {
    outcomes.push_back({{"id", o.id},
                        {"arrival_time", o.arrival_time},
                        {"priority", o.priority},
                        {"first_block", o.first_block},
                        {"censored", o.censored},
                        {"k_prime", o.k_prime},
                        {"k_double_prime", o.k_double_prime},
                        {"k", o.k}});
  }
  return {{"seed", trace.seed},
          {"warmup_blocks", trace.warmup_blocks},
          {"blocks", blocks},
          {"message_outcomes", outcomes},
          {"n", histogram_json(trace.n_hist)},
          {"injected", histogram_json(trace.injected_hist)},
          {"outcomes", {{"kprime", histogram_json(trace.outcome_kprime)},
                        {"kpp_first", histogram_json(trace.outcome_kpp_first)},
                        {"kpp_later", histogram_json(trace.outcome_kpp_later)},
                        {"censored", trace.censored_messages}}},
          {"aligned_probes", probes_json(trace.aligned_probes)},
          {"time_probes", probes_json(trace.time_probes)},
          {"sandwich", audit_json(trace.sandwich)},
          {"rejected_orders", trace.rejected_orders},
          {"final_reserve_a", trace.final_reserve_a},
          {"final_reserve_b", trace.final_reserve_b}};
}

Json to_json(const mc::McReport& r) {
  Json bands = Json::array();
  for (const auto& b : r.bands) {
    bands.push_back({{"k", b.k},
                     {"half_width", b.half_width},
                     {"prob_bound", b.prob_bound},
                     {"lower", b.lower},
                     {"upper", b.upper},
                     {"freq_outside_band", b.freq_outside_band},
                     {"freq_vs_forecast", b.freq_vs_forecast}});
  }
  return {{"seed", r.seed},
          {"n_samples", r.n_samples},
          {"n_accepted", r.n_accepted},
          {"n_rejected", r.n_rejected},
          {"rejected_fraction", r.rejected_fraction},
          {"forecast_price", r.forecast_price},
          {"mean_price", r.mean_price},
          {"var_price", r.var_price},
          {"cv_price", r.cv_price},
          {"mean_reserve_a", r.mean_reserve_a},
          {"var_reserve_a", r.var_reserve_a},
          {"mean_k", r.mean_k},
          {"chebyshev", bands}};
}

void write_samples_csv(std::ostream& out, const mc::McReport& r) {
  out << "replication,k,reserve_a,price,rejected\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& s = r.samples[i];
    out << i << ',' << s.k << ',' << format_double(s.reserve_a) << ',' << format_double(s.price)
        << ',' << (s.rejected ? 1 : 0) << '\n';
  }
}

namespace {

Json estimates_json(const std::vector<ingest::Estimate>& below, const ingest::Estimate& full) {
  Json arr = Json::array();
  auto one = [](const ingest::Estimate& e) {
    return Json{{"value", e.value}, {"count", e.count},  {"trials", e.trials},
                {"probability", e.probability}, {"lower", e.lower}, {"upper", e.upper}};
  };
  for (const auto& e : below) arr.push_back(one(e));
  return {{"below", arr}, {"full", one(full)}};
}

}  // namespace

Json to_json(const ingest::EmpiricalEstimate& e) {
  Json prob_n = Json::array();
  Json trans = Json::array();
  for (const auto& x : e.prob_n.below) prob_n.push_back(x.probability);
  for (const auto& x : e.trans.below) trans.push_back(x.probability);
  return {{"schema_version", kSchemaVersion},
          {"beta", e.beta},
          {"prob_n", prob_n},
          {"trans_from_full", trans},
          {"estimate", {{"threshold", e.threshold},
                        {"n_blocks_used", e.n_blocks_used},
                        {"n_pairs", e.trans.n_pairs},
                        {"prob_n", estimates_json(e.prob_n.below, e.prob_n.full)},
                        {"trans_from_full", estimates_json(e.trans.below, e.trans.full)}}}};
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mempoolq::io
