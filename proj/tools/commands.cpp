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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mempoolq/cfmm.hpp"
#include "mempoolq/error.hpp"
#include "mempoolq/ingest.hpp"
#include "mempoolq/io.hpp"
#include "mempoolq/orderflow_mc.hpp"
#include "mempoolq/priority_analytics.hpp"
#include "mempoolq/queue_core.hpp"
#include "mempoolq/stats.hpp"

namespace mempoolq::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int threads = 1;
  std::string format = "csv";
  // ingest
  std::string input;
  int beta = 0;
  double threshold = 0.0;
};

/// Thrown by a command after a config-stage failure so the exit code is 2 even
/// for numerical errors raised while validating parameters.
struct ConfigFailure {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <class F>
auto config_stage(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ConfigFailure{e.what()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigFailure{e.what()};
  }
}

Json load_config(const Options& o) {
  if (o.config.empty()) throw ConfigFailure{"--config is required"};
  return config_stage([&] { return io::read_json_file(o.config); });
}

class Outputs {
 public:
  Outputs(const Options& o, std::string command, const std::vector<std::string>& args)
      : dir_(o.out_dir), command_(std::move(command)), args_(args) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigFailure{"cannot create output directory '" + dir_.string() + "'"};
  }

  std::string path(const std::string& name) {
    names_.push_back(name);
    return (dir_ / name).string();
  }

  void text(const std::string& name, const std::string& content) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw ConfigFailure{"cannot write '" + name + "'"};
    out << content;
  }

  void json(const std::string& name, const Json& j) { io::write_json_file(path(name), j); }

  void manifest(std::uint64_t config_hash, std::optional<std::uint64_t> seed) {
    Json m;
    m["command"] = command_;
    m["args"] = args_;
    m["config_hash"] = hex64(config_hash);
    if (seed) {
      m["seed"] = *seed;
    } else {
      m["seed"] = nullptr;
    }
    m["version"] = kVersion;
    m["outputs"] = names_;
    io::write_json_file((dir_ / "manifest.json").string(), m);
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> args_;
  std::vector<std::string> names_;
};

std::string csv_table(const std::vector<double>& probs) {
  std::ostringstream s;
  io::write_table_csv(s, probs);
  return s.str();
}

std::uint64_t config_hash(const Options& o, const std::string& extra = {}) {
  return io::fnv1a(read_file(o.config) + extra);
}

// --- analytic ---------------------------------------------------------------

int cmd_analytic(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  Json j = load_config(o);
  auto cfg = config_stage([&] { return io::analytic_config_from_json(j); });
  auto inputs = config_stage([&] { return cfg.inputs(); });

  auto kd = analytics::k_distributions(inputs);
  std::size_t k_max = cfg.k_max;
  if (k_max == 0) {
    k_max = 1;
    while (kd.kprime.tail(k_max) > 1e-12 && k_max < 1000000) k_max *= 2;
  }
  auto kprime = kd.kprime.table(k_max);
  std::size_t k_len = std::min<std::size_t>(
      (k_max + 1) * static_cast<std::size_t>(inputs.beta), 1000000);
  auto k_table = analytics::full_k_distribution(inputs, k_len - 1);

  Outputs files(o, "analytic", args);
  files.text("kprime.csv", csv_table(kprime));
  files.text("kpp_first.csv", csv_table(kd.kpp_first));
  files.text("kpp_later.csv", csv_table(kd.kpp_later));
  files.text("k_head.csv", csv_table(kd.k_head));
  files.text("k.csv", csv_table(k_table.probs));

  Json summary;
  summary["beta"] = inputs.beta;
  char line[160];
  if (cfg.lambda) {
    auto model = analytics::make_model(*cfg.lambda, *cfg.mu, cfg.beta);
    summary["lambda"] = *cfg.lambda;
    summary["mu"] = *cfg.mu;
    summary["block_time"] = cfg.block_time_law == queue::BlockTimeLaw::constant ? "constant" : "exponential";
    summary["p"] = model.p;
    summary["q"] = model.q;
    double pb = std::pow(model.p, cfg.beta - 1);
    summary["p_pow_beta_minus_1"] = pb;
    summary["one_minus_p_pow_beta_minus_1"] = 1.0 - pb;
    std::snprintf(line, sizeof line, "p = %s\nq = %s\n", io::format_double(model.p).c_str(),
                  io::format_double(model.q).c_str());
    out << line;
    std::snprintf(line, sizeof line, "p^(beta-1) = %s\n1 - p^(beta-1) = %s\n",
                  io::format_double(pb).c_str(), io::format_double(1.0 - pb).c_str());
    out << line;
  }
  summary["prob_kprime_zero"] = kd.kprime.prob_first();
  summary["leave_prob"] = kd.kprime.leave_prob();
  summary["kprime_mean"] = kd.kprime.mean();
  summary["kprime_tail_mass"] = kd.kprime.tail(k_max);
  summary["k_tail_mass"] = k_table.tail_mass;
  summary["kprime"] = io::table_json(kprime);
  summary["kpp_first"] = io::table_json(kd.kpp_first);
  summary["kpp_later"] = io::table_json(kd.kpp_later);
  summary["k_head"] = io::table_json(kd.k_head);
  summary["k"] = io::table_json(k_table.probs);
  files.json("analytic.json", summary);
  out << "P(K'=0) = " << io::format_double(kd.kprime.prob_first()) << '\n';
  files.manifest(config_hash(o), std::nullopt);
  return 0;
}

// --- simulate ---------------------------------------------------------------

queue::SimConfig load_sim_config(const Options& o) {
  Json j = load_config(o);
  auto c = config_stage([&] { return io::sim_config_from_json(j); });
  if (o.seed) c.seed = *o.seed;
  config_stage([&] {
    c.validate();
    return 0;
  });
  return c;
}

double high_priority_rate(const queue::SimConfig& c) {
  return c.lambda * (1.0 - std::clamp(c.reference_priority, 0.0, 1.0));
}

void write_trace(Outputs& files, const Options& o, const queue::SimTrace& trace) {
  if (o.format == "json") {
    files.json("trace.json", io::trace_json(trace));
    return;
  }
  std::ostringstream blocks;
  io::write_blocks_csv(blocks, trace);
  files.text("blocks.csv", blocks.str());
  if (!trace.message_outcomes.empty()) {
    std::ostringstream outcomes;
    io::write_outcomes_csv(outcomes, trace);
    files.text("outcomes.csv", outcomes.str());
  }
  bool has_messages = std::any_of(trace.blocks.begin(), trace.blocks.end(),
                                  [](const auto& b) { return !b.messages.empty(); });
  if (has_messages) {
    std::ostringstream rows;
    ingest::write_block_rows(trace, rows);
    files.text("confirmed_blocks.csv", rows.str());
  }
}

Json summary_json(const queue::SimConfig& c, const queue::SimTrace& trace, std::ostream& out) {
  Json s;
  s["seed"] = trace.seed;
  s["warmup_blocks"] = trace.warmup_blocks;
  s["blocks"] = static_cast<std::int64_t>(trace.blocks.size());
  s["n"] = io::histogram_json(trace.n_hist);
  s["injected"] = io::histogram_json(trace.injected_hist);
  s["outcome_kprime"] = io::histogram_json(trace.outcome_kprime);
  s["outcome_kpp_first"] = io::histogram_json(trace.outcome_kpp_first);
  s["outcome_kpp_later"] = io::histogram_json(trace.outcome_kpp_later);
  s["censored_messages"] = trace.censored_messages;
  s["aligned_kprime"] = io::histogram_json(trace.aligned_probes.kprime);
  s["aligned_kpp_first"] = io::histogram_json(trace.aligned_probes.kpp_first);
  s["aligned_kpp_later"] = io::histogram_json(trace.aligned_probes.kpp_later);
  s["time_kprime"] = io::histogram_json(trace.time_probes.kprime);
  s["rejected_orders"] = trace.rejected_orders;
  out << "seed = " << trace.seed << '\n';

  double lambda_high = high_priority_rate(c);
  bool analytic = c.scheduler.kind == queue::SchedulerKind::priority &&
                  c.block_time_law == queue::BlockTimeLaw::exponential &&
                  lambda_high < c.mu * c.beta;
  if (analytic) {
    auto model = analytics::make_model(lambda_high, c.mu, c.beta);
    auto inputs = analytics::geometric_inputs(model);
    auto kd = analytics::k_distributions(inputs);
    auto n_emp = trace.n_hist.pmf();
    std::vector<double> geo(n_emp.size() + 1);
    for (std::size_t n = 0; n < geo.size(); ++n) geo[n] = (1.0 - model.p) * std::pow(model.p, n);
    geo.back() = std::pow(model.p, geo.size() - 1);  // tail lumped into the last cell
    auto kp_emp = trace.aligned_probes.kprime.pmf();
    auto kp = kd.kprime.table(kp_emp.size());
    kp.back() += kd.kprime.tail(kp_emp.size());
    Json tv;
    tv["n_vs_geometric"] = stats::total_variation(n_emp, geo);
    tv["kprime_vs_analytic"] = stats::total_variation(kp_emp, kp);
    tv["kpp_first_vs_analytic"] =
        stats::total_variation(trace.aligned_probes.kpp_first.pmf(), kd.kpp_first);
    tv["kpp_later_vs_analytic"] =
        stats::total_variation(trace.aligned_probes.kpp_later.pmf(), kd.kpp_later);
    s["p"] = model.p;
    s["total_variation"] = tv;
    out << "p = " << io::format_double(model.p) << '\n';
    out << "TV(empirical N, geometric) = " << io::format_double(tv["n_vs_geometric"].get<double>()) << '\n';
    out << "TV(empirical K', analytic) = " << io::format_double(tv["kprime_vs_analytic"].get<double>()) << '\n';
  }
  if (c.scheduler.kind == queue::SchedulerKind::sandwicher) {
    s["sandwich"] = io::audit_json(trace.sandwich);
    out << "victims = " << trace.sandwich.victims << ", sandwiched = " << trace.sandwich.sandwiched
        << ", violations = " << trace.sandwich.violations << '\n';
    out << "unsandwiched fraction = " << io::format_double(trace.sandwich.unsandwiched_fraction())
        << '\n';
  }
  return s;
}

int cmd_simulate(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  auto c = load_sim_config(o);
  auto trace = queue::run_simulation(c);
  Outputs files(o, "simulate", args);
  write_trace(files, o, trace);
  files.json("summary.json", summary_json(c, trace, out));
  files.json("config.json", io::to_json(c));
  files.manifest(config_hash(o), c.seed);
  return 0;
}

// --- sandwich-audit -----------------------------------------------------------

int cmd_sandwich_audit(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  auto c = load_sim_config(o);
  if (c.scheduler.kind != queue::SchedulerKind::sandwicher) {
    throw ConfigFailure{"sandwich-audit needs scheduler.kind = 'sandwicher'"};
  }
  auto trace = queue::run_simulation(c);

  auto pool = cfmm::CfmmState::from_reserves(c.pool.rule, c.pool.reserve_a, c.pool.reserve_b);
  auto [lo, hi] = pool.rule().domain();
  double x_lo = std::max(lo, 0.5 * c.pool.reserve_a);
  double x_hi = std::min(hi, 2.0 * c.pool.reserve_a);
  if (hi <= x_hi) x_hi = 0.5 * (c.pool.reserve_a + hi);
  bool convex = cfmm::is_strictly_convex(pool.rule(), x_lo, x_hi);

  Json j;
  j["seed"] = trace.seed;
  j["rule"] = std::string(pool.rule().name());
  j["strictly_convex"] = convex;
  j["convexity_range"] = {x_lo, x_hi};
  j["budget"] = c.scheduler.budget;
  j["audit"] = io::audit_json(trace.sandwich);
  j["rejected_orders"] = trace.rejected_orders;
  j["final_reserve_a"] = trace.final_reserve_a;
  j["final_reserve_b"] = trace.final_reserve_b;

  Outputs files(o, "sandwich-audit", args);
  files.json("audit.json", j);
  std::ostringstream blocks;
  io::write_blocks_csv(blocks, trace);
  files.text("blocks.csv", blocks.str());
  files.manifest(config_hash(o), c.seed);

  out << "rule = " << pool.rule().name() << (convex ? " (strictly convex)" : " (not strictly convex)")
      << '\n';
  out << "victims = " << trace.sandwich.victims << ", sandwiched = " << trace.sandwich.sandwiched
      << ", excused (block length) = " << trace.sandwich.excused_full
      << ", excused (volume) = " << trace.sandwich.excused_volume
      << ", violations = " << trace.sandwich.violations << '\n';
  out << "unsandwiched fraction = " << io::format_double(trace.sandwich.unsandwiched_fraction())
      << '\n';
  out << "sandwicher profit (B) = " << io::format_double(trace.sandwich.profit_b) << '\n';
  return 0;
}

// --- mc-price ----------------------------------------------------------------

int cmd_mc_price(const Options& o, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  Json j = load_config(o);
  auto s = config_stage([&] { return io::mc_scenario_from_json(j); });
  if (o.seed) s.options.seed = *o.seed;
  s.options.threads = o.threads;
  auto pool = config_stage([&] {
    auto rule = cfmm::make_rule(s.pool.rule, s.pool.reserve_a, s.pool.reserve_b, s.weight_a);
    return cfmm::CfmmState(rule, s.pool.reserve_a);
  });
  config_stage([&] {
    if (!cfmm::order_fits(pool, s.order)) throw validation_error("tagged order does not fit the pool");
    return 0;
  });

  auto report = mc::mc_execution_price(pool, s.law, s.k_model, s.order, s.options);
  Outputs files(o, "mc-price", args);
  files.json("report.json", io::to_json(report));
  if (s.dump_samples) {
    std::ostringstream rows;
    io::write_samples_csv(rows, report);
    files.text("samples.csv", rows.str());
  }
  files.manifest(config_hash(o), s.options.seed);

  if (report.rejected_fraction > 0.1) {
    err << "warning: " << io::format_double(report.rejected_fraction)
        << " of replications rejected; order flow is not small against the reserves\n";
  }
  out << "seed = " << report.seed << '\n';
  out << "mean price = " << io::format_double(report.mean_price) << '\n';
  out << "c_v = " << io::format_double(report.cv_price) << '\n';
  for (const auto& b : report.bands) {
    out << "P(|price/mean - 1| >= " << io::format_double(b.k) << " c_v) <= "
        << io::format_double(b.prob_bound) << " (observed " << io::format_double(b.freq_outside_band)
        << ")\n";
  }
  return 0;
}

// --- ingest -------------------------------------------------------------------

int cmd_ingest(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  if (o.input.empty()) throw ConfigFailure{"--input is required"};
  if (o.beta < 1) throw ConfigFailure{"--beta must be >= 1"};
  auto e = config_stage([&] {
    auto counts = ingest::load_blocks(o.input, o.beta, o.threshold);
    return ingest::estimate(counts, o.beta, o.threshold);
  });
  Outputs files(o, "ingest", args);
  files.json("estimate.json", io::to_json(e));
  std::string extra = std::to_string(o.beta) + ',' + io::format_double(o.threshold);
  files.manifest(io::fnv1a(read_file(o.input) + extra), std::nullopt);
  out << "blocks = " << e.n_blocks_used << ", full blocks followed by a block = " << e.trans.n_pairs
      << '\n';
  out << "P(N >= beta) = " << io::format_double(e.prob_n.full.probability) << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mempool priority queue analytics, simulation and CFMM Monte Carlo", "mempoolq"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", o.config, "JSON config file")->required();
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--out", o.out_dir, "Output directory");
    sub->add_option("--threads", o.threads, "Threads for Monte Carlo replications")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", o.format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* analytic = app.add_subcommand("analytic", "Distribution tables of K', K'' and K");
  auto* simulate = app.add_subcommand("simulate", "Discrete-event mempool simulation");
  auto* mc_price = app.add_subcommand("mc-price", "Monte Carlo execution-price statistics");
  auto* audit = app.add_subcommand("sandwich-audit", "Sandwicher simulation with victim audit");
  auto* ingest_cmd = app.add_subcommand("ingest", "Estimate queue inputs from confirmed blocks");
  for (auto* sub : {analytic, simulate, mc_price, audit}) common(sub, true);
  common(ingest_cmd, false);
  ingest_cmd->add_option("--input", o.input, "CSV with block_number,tx_index,priority")->required();
  ingest_cmd->add_option("--beta", o.beta, "Block capacity")->required();
  ingest_cmd->add_option("--threshold", o.threshold, "Priority bound for high priority");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (analytic->parsed()) return cmd_analytic(o, args, out);
    if (simulate->parsed()) return cmd_simulate(o, args, out);
    if (mc_price->parsed()) return cmd_mc_price(o, args, out, err);
    if (audit->parsed()) return cmd_sandwich_audit(o, args, out);
    if (ingest_cmd->parsed()) return cmd_ingest(o, args, out);
  } catch (const ConfigFailure& e) {
    err << "error: " << e.message << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::numerical ? 3 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace mempoolq::cli
