// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/inference_engine.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <thread>
#include <tuple>

#include "llmplan/detail/checked.h"

namespace llmplan {

std::string_view to_string(Objective o) {
  return o == Objective::kMinLatency ? "min_latency" : "max_throughput";
}

std::optional<Objective> parse_objective(std::string_view s) {
  if (s == "min_latency") return Objective::kMinLatency;
  if (s == "max_throughput") return Objective::kMaxThroughput;
  return std::nullopt;
}

std::string_view to_string(PrecisionTolerance p) {
  return p == PrecisionTolerance::kStrict ? "strict" : "relaxed";
}

std::optional<PrecisionTolerance> parse_precision(std::string_view s) {
  if (s == "strict") return PrecisionTolerance::kStrict;
  if (s == "relaxed") return PrecisionTolerance::kRelaxed;
  return std::nullopt;
}

void validate(const PlanRequest& req) {
  if (req.model.empty()) throw ValidationError("model", "model must be non-empty");
  if (!(req.budget > 0.0) || !std::isfinite(req.budget)) {
    throw ValidationError("budget", "budget must be a finite value > 0");
  }
  if (req.prompt_len < 1) throw ValidationError("prompt_len", "prompt_len must be >= 1");
  if (req.output_len < 1) throw ValidationError("output_len", "output_len must be >= 1");
  if (req.batch_size < 1) throw ValidationError("batch_size", "batch_size must be >= 1");
  if (req.throughput_floor &&
      (!(*req.throughput_floor >= 0.0) || !std::isfinite(*req.throughput_floor))) {
    throw ValidationError("throughput_floor", "throughput_floor must be >= 0");
  }
  if (req.latency_ceiling &&
      (!(*req.latency_ceiling > 0.0) || !std::isfinite(*req.latency_ceiling))) {
    throw ValidationError("latency_ceiling", "latency_ceiling must be > 0");
  }
}

// --- Step 1: memory and parallelism ---------------------------------------

std::optional<std::uint64_t> available_memory(const HardwareSpec& g, const ModelSpec& m,
                                              std::uint64_t tp) {
  if (tp < 1) throw std::invalid_argument("tp must be >= 1");
  const std::uint64_t slice = detail::ceil_div(model_weight_bytes(m), tp);
  if (slice > g.memory_capacity) return std::nullopt;
  return g.memory_capacity - slice;
}

Parallelism max_parallelism(const HardwareSpec& g, const ModelSpec& m, std::uint64_t dp,
                            std::uint64_t tp, std::uint64_t prompt_len,
                            std::uint64_t output_len) {
  const auto avail = available_memory(g, m, tp);
  if (!avail) return {};
  const std::uint64_t per_request =
      kv_bytes_without_batch(m, detail::checked_add(prompt_len, output_len));
  const std::uint64_t per_replica = *avail / per_request;
  const std::uint64_t total = detail::checked_mul(dp, per_replica);
  return {total, total / dp};
}

// --- Step 2 metrics --------------------------------------------------------

double ttft(const SimResult& sim) { return sim.prefill_time; }

double tpot(const SimResult& sim, std::uint64_t output_len) {
  if (output_len == 0 || !(sim.decode_time > 0.0)) {
    throw std::domain_error("TPOT needs at least one simulated decode step");
  }
  return sim.decode_time / static_cast<double>(output_len);
}

double single_gpu_throughput(double tpot_s) {
  if (!(tpot_s > 0.0)) throw std::domain_error("TPOT must be > 0");
  return 1.0 / tpot_s;
}

double multi_gpu_throughput(std::uint64_t n_gpus, double t_single, std::uint64_t tp) {
  if (tp < 1 || !std::has_single_bit(tp)) {
    throw std::invalid_argument("tp must be a power of two");
  }
  return static_cast<double>(n_gpus) * t_single /
         (1.0 + std::log2(static_cast<double>(tp)));
}

// --- Search ----------------------------------------------------------------

std::vector<Candidate> enumerate_candidates(const PlanRequest& req, const Catalog& catalog,
                                            const EngineConfig& cfg) {
  std::vector<Framework> frameworks;
  if (req.framework) {
    frameworks.push_back(*req.framework);
  } else {
    frameworks = {Framework::kDynamicBatching, Framework::kSplitFuse};
  }
  std::vector<OptimizationFlags> opt_sets{{cfg.flash_attention, false, 1.0}};
  if (req.precision == PrecisionTolerance::kRelaxed) {
    opt_sets.push_back(OptimizationFlags::with_h2o(cfg.h2o_keep_ratio, cfg.flash_attention));
  }
  const auto configs = get_configurations(cfg.fleet_max);

  std::vector<Candidate> out;
  out.reserve(catalog.gpus().size() * configs.size() * frameworks.size() * opt_sets.size());
  for (const auto& g : catalog.gpus()) {
    for (const auto& pc : configs) {
      for (Framework fw : frameworks) {
        for (const auto& opts : opt_sets) out.push_back({&g, pc, fw, opts});
      }
    }
  }
  return out;
}

namespace {

// Largest prompt length <= requested whose worst-case residency fits in
// `token_capacity` tokens; 0 if none.
std::uint64_t fit_prompt_len(WorkloadSpec w, std::uint64_t token_capacity,
                             const AnalyzerConfig& acfg) {
  if (kv_residency_tokens(w, acfg) <= token_capacity) return w.prompt_len;
  std::uint64_t lo = 0, hi = w.prompt_len;  // residency(lo) fits or lo == 0
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo + 1) / 2;
    w.prompt_len = mid;
    if (kv_residency_tokens(w, acfg) <= token_capacity) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

CandidateOutcome reject(std::string_view why) {
  CandidateOutcome out;
  out.rejected_by = std::string(why);
  return out;
}

}  // namespace

CandidateOutcome evaluate_candidate(const PlanRequest& req, const ModelSpec& model,
                                    const Candidate& cand, const EngineConfig& cfg,
                                    bool keep_tasks) {
  const HardwareSpec& g = *cand.gpu;
  const ParallelConfig& pc = cand.config;
  pc.validate();

  const double cost = static_cast<double>(pc.gpus_used()) * g.unit_price;
  if (cost > req.budget) return reject(constraint::kBudget);

  const auto avail = available_memory(g, model, pc.tp);
  if (!avail) return reject(constraint::kMemory);
  const MemoryBudget budget = *MemoryBudget::make(g.memory_capacity, g.memory_capacity - *avail);

  WorkloadSpec w{req.batch_size, req.prompt_len, req.output_len, cand.framework, cand.opts};

  // Sequence first: the prompt is clamped so that one request fits.
  w.prompt_len = fit_prompt_len(w, max_seq_len(budget, model, 1), cfg.analyzer);
  if (w.prompt_len == 0) return reject(constraint::kMemory);

  // Then the batch: per-replica cap, replicated dp times.
  const std::uint64_t residency = kv_residency_tokens(w, cfg.analyzer);
  const std::uint64_t b_max = max_batch_size(budget, model, residency);
  if (b_max == 0) return reject(constraint::kMemory);
  w.batch_size = adjust_batch(req.batch_size, detail::checked_mul(pc.dp, b_max));

  const auto shards = near_equal_shards(w.batch_size, pc.dp);
  std::vector<std::vector<Task>> replicas(pc.dp);
  for (std::size_t r = 0; r < shards.size(); ++r) {
    if (shards[r] == 0) continue;
    if (r > 0 && shards[r] == shards[r - 1]) {
      replicas[r] = replicas[r - 1];
      continue;
    }
    WorkloadSpec shard_w = w;
    shard_w.batch_size = shards[r];
    replicas[r] = generate_task_list(model, shard_w, budget, cfg.analyzer);
  }

  SimOptions sim_opts;
  sim_opts.time_model = cfg.time_model;
  const SimResult sim = simulate_replicas(replicas, pc.tp, g, sim_opts);

  DeploymentPlan p;
  p.gpu = g.name;
  p.gpu_count = pc.gpus_used();
  p.dp = pc.dp;
  p.tp = pc.tp;
  p.framework = cand.framework;
  p.h2o = cand.opts.h2o;
  p.adjusted_batch = w.batch_size;
  p.adjusted_seq = w.prompt_len;
  p.cost = cost;
  p.metrics.ttft = ttft(sim);
  p.metrics.tpot = tpot(sim, w.output_len);
  p.metrics.batch_latency = sim.total_time;
  p.metrics.throughput =
      multi_gpu_throughput(pc.gpus_used(), single_gpu_throughput(p.metrics.tpot), pc.tp);
  p.metrics.memory_per_gpu =
      budget.c_model + kv_bytes_per_request(model, residency, shards.front());
  p.prefill_bound = sim.prefill_bound;
  p.decode_bound = sim.decode_bound;

  if (req.throughput_floor && p.metrics.throughput < *req.throughput_floor) {
    return reject(constraint::kThroughputFloor);
  }
  if (req.latency_ceiling && p.metrics.batch_latency > *req.latency_ceiling) {
    return reject(constraint::kLatencyCeiling);
  }

  CandidateOutcome out;
  out.plan = std::move(p);
  if (keep_tasks) out.replica_tasks = std::move(replicas);
  return out;
}

bool plan_better(const DeploymentPlan& a, const DeploymentPlan& b, Objective objective) {
  if (objective == Objective::kMinLatency) {
    if (a.metrics.batch_latency != b.metrics.batch_latency) {
      return a.metrics.batch_latency < b.metrics.batch_latency;
    }
  } else if (a.metrics.throughput != b.metrics.throughput) {
    return a.metrics.throughput > b.metrics.throughput;
  }
  const auto key = [](const DeploymentPlan& p) {
    return std::tie(p.cost, p.gpu_count, p.gpu, p.tp, p.dp, p.framework, p.h2o);
  };
  return key(a) < key(b);
}

PlanOutcome plan(const PlanRequest& req, const Catalog& catalog, const EngineConfig& cfg) {
  validate(req);
  const ModelSpec* model = catalog.find_model(req.model);
  if (!model) throw UnknownModelError(req.model);

  const std::vector<Candidate> cands = enumerate_candidates(req, catalog, cfg);
  std::vector<CandidateOutcome> outcomes(cands.size());

  // Candidates are independent; slots are indexed so the merge is
  // independent of scheduling.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cands.size(); i = next++) {
      outcomes[i] = evaluate_candidate(req, *model, cands[i], cfg);
    }
  };
  unsigned n_threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  n_threads = std::clamp<unsigned>(n_threads, 1, 16);
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, cands.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  PlanOutcome out;
  out.candidates = cands.size();
  for (auto& o : outcomes) {
    if (o.plan) {
      out.plans.push_back(std::move(*o.plan));
    } else {
      ++out.rejections[o.rejected_by];
    }
  }
  std::sort(out.plans.begin(), out.plans.end(),
            [&](const DeploymentPlan& a, const DeploymentPlan& b) {
              return plan_better(a, b, req.objective);
            });
  if (out.plans.size() > 3) out.plans.resize(3);

  if (out.plans.empty()) {
    if (out.rejections.empty()) {
      out.binding_constraint = "hardware";  // no GPU types in the catalog
    } else {
      // Most frequent; std::map order breaks ties deterministically.
      auto best = std::max_element(
          out.rejections.begin(), out.rejections.end(),
          [](const auto& a, const auto& b) { return a.second < b.second; });
      out.binding_constraint = best->first;
    }
  }
  return out;
}

}  // namespace llmplan
