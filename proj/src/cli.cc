// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/cli.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "llmplan/catalog.h"
#include "llmplan/inference_engine.h"
#include "llmplan/service.h"
#include "llmplan/wire.h"

namespace llmplan {

namespace {

struct CatalogFlags {
  std::string gpus_file = std::string(LLMPLAN_DEFAULT_DATA_DIR) + "/gpus.yaml";
  std::string models_file = std::string(LLMPLAN_DEFAULT_DATA_DIR) + "/models.yaml";

  void add_to(CLI::App* app) {
    app->add_option("--gpus-file", gpus_file, "GPU catalog file")
        ->envname("LLMPLAN_GPUS_FILE")
        ->capture_default_str();
    app->add_option("--models-file", models_file, "Model catalog file")
        ->envname("LLMPLAN_MODELS_FILE")
        ->capture_default_str();
  }

  Catalog load() const { return load_catalog(gpus_file, models_file); }
};

struct PlanFlags {
  std::string model;
  double budget = 0.0;
  std::uint64_t prompt_len = 0;
  std::uint64_t output_len = 0;
  std::uint64_t batch = 1;
  std::string objective = "min_latency";
  std::string framework = "search";
  std::string precision = "strict";
  std::optional<double> throughput_floor;
  std::optional<double> latency_ceiling;
  std::uint64_t fleet_max = 8;
  unsigned threads = 0;
  bool json = false;
  std::string dump_tasks;
  std::string dump_timing;
};

PlanRequest to_request(const PlanFlags& f) {
  PlanRequest req;
  req.model = f.model;
  req.budget = f.budget;
  req.prompt_len = f.prompt_len;
  req.output_len = f.output_len;
  req.batch_size = f.batch;
  req.objective = *parse_objective(f.objective);
  req.precision = *parse_precision(f.precision);
  if (f.framework != "search") req.framework = parse_framework(f.framework);
  req.throughput_floor = f.throughput_floor;
  req.latency_ceiling = f.latency_ceiling;
  validate(req);
  return req;
}

void print_table(std::ostream& out, const PlanRequest& req, const PlanOutcome& outcome) {
  fmt::print(out, "model {}  budget {}  prompt {}  output {}  batch {}  objective {}\n",
             req.model, req.budget, req.prompt_len, req.output_len, req.batch_size,
             to_string(req.objective));
  fmt::print(out, "{:<4} {:<10} {:>4} {:>3} {:>3} {:<12} {:<3} {:>5} {:>6} {:>9} {:>9} "
                  "{:>10} {:>11} {:>8} {:>10}\n",
             "rank", "gpu", "gpus", "dp", "tp", "framework", "h2o", "batch", "seq",
             "ttft_s", "tpot_ms", "latency_s", "tokens/s", "mem_GiB", "cost");
  int rank = 1;
  for (const auto& p : outcome.plans) {
    fmt::print(out, "{:<4} {:<10} {:>4} {:>3} {:>3} {:<12} {:<3} {:>5} {:>6} {:>9.4f} "
                    "{:>9.3f} {:>10.4f} {:>11.2f} {:>8.2f} {:>10.2f}\n",
               rank++, p.gpu, p.gpu_count, p.dp, p.tp, to_string(p.framework),
               p.h2o ? "yes" : "no", p.adjusted_batch, p.adjusted_seq, p.metrics.ttft,
               p.metrics.tpot * 1e3, p.metrics.batch_latency, p.metrics.throughput,
               static_cast<double>(p.metrics.memory_per_gpu) / (1024.0 * 1024.0 * 1024.0),
               p.cost);
  }
}

void write_dump(const std::string& path, const wire::json& j, std::ostream& err) {
  if (path == "-") {
    err << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << j.dump(2) << "\n";
}

// Re-runs the top plan keeping its task lists and writes the requested dumps.
void dump_top_plan(const PlanFlags& f, const PlanRequest& req, const Catalog& catalog,
                   const EngineConfig& cfg, const DeploymentPlan& top, std::ostream& err) {
  Candidate cand;
  cand.gpu = catalog.find_gpu(top.gpu);
  cand.config = {top.dp, top.tp};
  cand.framework = top.framework;
  cand.opts = top.h2o ? OptimizationFlags::with_h2o(cfg.h2o_keep_ratio, cfg.flash_attention)
                      : OptimizationFlags{cfg.flash_attention, false, 1.0};
  const auto outcome =
      evaluate_candidate(req, *catalog.find_model(req.model), cand, cfg, /*keep_tasks=*/true);
  if (!outcome.plan || outcome.replica_tasks.empty()) return;
  // Replica 0 carries the largest shard, so it is the straggler.
  const auto& tasks = outcome.replica_tasks.front();
  if (!f.dump_tasks.empty()) write_dump(f.dump_tasks, wire::task_list(tasks), err);
  if (!f.dump_timing.empty()) {
    write_dump(f.dump_timing, wire::timing_breakdown(tasks, *cand.gpu, top.tp, cfg.time_model),
               err);
  }
}

int cmd_plan(const PlanFlags& f, const CatalogFlags& cf, std::ostream& out, std::ostream& err) {
  PlanRequest req;
  try {
    req = to_request(f);
  } catch (const ValidationError& e) {
    err << "error: invalid --" << e.field() << ": " << e.what() << "\n";
    return kExitError;
  }
  const Catalog catalog = cf.load();

  EngineConfig cfg;
  cfg.fleet_max = f.fleet_max;
  cfg.threads = f.threads;
  PlanOutcome outcome;
  try {
    outcome = plan(req, catalog, cfg);
  } catch (const UnknownModelError& e) {
    err << "error: unknown model '" << e.model() << "'\n";
    if (f.json) {
      out << wire::error_response(wire::code::kUnknownModel, e.what()).dump(2) << "\n";
    }
    return kExitError;
  }

  if (f.json) {
    out << wire::plan_response(outcome).dump(2) << "\n";
  } else if (outcome.plans.empty()) {
    out << "no feasible plan; binding constraint: " << outcome.binding_constraint << "\n";
  } else {
    print_table(out, req, outcome);
  }
  if (!outcome.plans.empty() && (!f.dump_tasks.empty() || !f.dump_timing.empty())) {
    dump_top_plan(f, req, catalog, cfg, outcome.plans.front(), err);
  }
  return outcome.plans.empty() ? kExitNoFeasible : kExitOk;
}

int cmd_catalog(const std::string& kind, bool json, const CatalogFlags& cf, std::ostream& out) {
  const Catalog catalog = cf.load();
  if (json) {
    out << (kind == "gpus" ? wire::gpu_listing(catalog) : wire::model_listing(catalog)).dump(2)
        << "\n";
    return kExitOk;
  }
  if (kind == "gpus") {
    fmt::print(out, "{:<12} {:>10} {:>9} {:>10} {:>10} {:>10} {:>10}\n", "name", "TFLOP/s",
               "mem_GiB", "mem_GB/s", "link_GB/s", "latency_us", "price");
    for (const auto& g : catalog.gpus()) {
      fmt::print(out, "{:<12} {:>10.1f} {:>9.1f} {:>10.1f} {:>10.2f} {:>10.1f} {:>10.2f}\n",
                 g.name, g.peak_compute / 1e12,
                 static_cast<double>(g.memory_capacity) / (1024.0 * 1024.0 * 1024.0),
                 g.memory_bandwidth / 1e9, g.comm_bandwidth / 1e9, g.comm_latency * 1e6,
                 g.unit_price);
    }
  } else {
    fmt::print(out, "{:<14} {:>6} {:>6} {:>6} {:>8} {:>7} {:>8} {:>14}\n", "name", "layers",
               "hidden", "heads", "kv_heads", "ffn", "vocab", "params");
    for (const auto& m : catalog.models()) {
      fmt::print(out, "{:<14} {:>6} {:>6} {:>6} {:>8} {:>7} {:>8} {:>14}\n", m.name,
                 m.num_layers, m.hidden_size, m.num_heads, m.num_kv_heads, m.ffn_size,
                 m.vocab_size, model_param_count(m));
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"llmplan: analytical LLM inference deployment planner"};
  app.require_subcommand(1);

  CatalogFlags catalog_flags;
  PlanFlags pf;
  auto* plan_cmd = app.add_subcommand("plan", "Search deployment plans for a workload");
  plan_cmd->add_option("--model", pf.model, "Model name from the catalog")->required();
  plan_cmd->add_option("--budget", pf.budget, "Hardware budget (currency units)")->required();
  plan_cmd->add_option("--prompt-len", pf.prompt_len, "Prompt tokens per request")->required();
  plan_cmd->add_option("--output-len", pf.output_len, "Generated tokens per request")
      ->required();
  plan_cmd->add_option("--batch", pf.batch, "Requested batch size")->capture_default_str();
  plan_cmd->add_option("--objective", pf.objective, "min_latency | max_throughput")
      ->check(CLI::IsMember({"min_latency", "max_throughput"}))
      ->capture_default_str();
  plan_cmd->add_option("--framework", pf.framework, "dyn_batching | split_fuse | search")
      ->check(CLI::IsMember({"dyn_batching", "split_fuse", "search"}))
      ->capture_default_str();
  plan_cmd->add_option("--precision", pf.precision, "strict | relaxed")
      ->check(CLI::IsMember({"strict", "relaxed"}))
      ->capture_default_str();
  plan_cmd->add_option("--throughput-floor", pf.throughput_floor, "Minimum tokens/s");
  plan_cmd->add_option("--latency-ceiling", pf.latency_ceiling, "Maximum batch latency (s)");
  plan_cmd->add_option("--fleet-max", pf.fleet_max, "Largest GPU count considered")
      ->envname("LLMPLAN_FLEET_MAX")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  plan_cmd->add_option("--threads", pf.threads, "Worker threads (0 = all cores)");
  plan_cmd->add_flag("--json", pf.json, "Print the wire-format JSON response");
  plan_cmd->add_option("--dump-tasks", pf.dump_tasks,
                       "Write the top plan's task list as JSON to FILE ('-' = stderr)");
  plan_cmd->add_option("--dump-timing", pf.dump_timing,
                       "Write the top plan's per-task timing as JSON to FILE ('-' = stderr)");
  catalog_flags.add_to(plan_cmd);

  std::string kind;
  bool catalog_json = false;
  auto* catalog_cmd = app.add_subcommand("catalog", "List catalog GPUs or models");
  catalog_cmd->add_option("kind", kind, "gpus | models")
      ->required()
      ->check(CLI::IsMember({"gpus", "models"}));
  catalog_cmd->add_flag("--json", catalog_json, "Print JSON");
  catalog_flags.add_to(catalog_cmd);

  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t serve_fleet_max = 8;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP JSON service");
  serve_cmd->add_option("--host", host, "Bind address")->envname("LLMPLAN_HOST")->capture_default_str();
  serve_cmd->add_option("--port", port, "Port")->envname("LLMPLAN_PORT")->capture_default_str();
  serve_cmd->add_option("--fleet-max", serve_fleet_max, "Largest GPU count considered")
      ->envname("LLMPLAN_FLEET_MAX")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  catalog_flags.add_to(serve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (*plan_cmd) return cmd_plan(pf, catalog_flags, out, err);
    if (*catalog_cmd) return cmd_catalog(kind, catalog_json, catalog_flags, out);
    if (*serve_cmd) {
      EngineConfig cfg;
      cfg.fleet_max = serve_fleet_max;
      PlanService service(catalog_flags.load(), cfg);
      err << "llmplan: serving on http://" << host << ":" << port << "/api/v1\n";
      if (!serve(service, host, port)) {
        err << "error: cannot listen on " << host << ":" << port << "\n";
        return kExitError;
      }
      return kExitOk;
    }
  } catch (const CatalogError& e) {
    err << "error: catalog: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace llmplan
