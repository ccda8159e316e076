// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "llmplan/catalog.h"
#include "llmplan/model_analyzer.h"
#include "llmplan/parallel_simulator.h"

namespace llmplan {

enum class Objective { kMinLatency, kMaxThroughput };
std::string_view to_string(Objective o);
std::optional<Objective> parse_objective(std::string_view s);

// strict: exact KV only. relaxed: lossy KV eviction (H2O) may be searched.
enum class PrecisionTolerance { kStrict, kRelaxed };
std::string_view to_string(PrecisionTolerance p);
std::optional<PrecisionTolerance> parse_precision(std::string_view s);

struct PlanRequest {
  std::string model;
  double budget = 0.0;
  std::uint64_t prompt_len = 0;
  std::uint64_t output_len = 0;
  std::uint64_t batch_size = 1;
  Objective objective = Objective::kMinLatency;
  std::optional<double> throughput_floor;  // tokens/s
  std::optional<double> latency_ceiling;   // seconds
  PrecisionTolerance precision = PrecisionTolerance::kStrict;
  std::optional<Framework> framework;      // nullopt searches both
};

// Invalid request field. `field` uses the wire name.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class UnknownModelError : public std::runtime_error {
 public:
  explicit UnknownModelError(std::string model)
      : std::runtime_error("unknown model '" + model + "'"), model_(std::move(model)) {}
  const std::string& model() const { return model_; }

 private:
  std::string model_;
};

void validate(const PlanRequest& req);

struct PlanMetrics {
  double ttft = 0.0;           // s, prefill phase time
  double tpot = 0.0;           // s, decode time per output step
  double batch_latency = 0.0;  // s
  double throughput = 0.0;     // tokens/s
  std::uint64_t memory_per_gpu = 0;  // bytes
};

struct DeploymentPlan {
  std::string gpu;
  std::uint64_t gpu_count = 0;
  std::uint64_t dp = 1;
  std::uint64_t tp = 1;
  Framework framework = Framework::kDynamicBatching;
  bool h2o = false;
  std::uint64_t adjusted_batch = 0;
  std::uint64_t adjusted_seq = 0;
  PlanMetrics metrics;
  double cost = 0.0;
  Bottleneck prefill_bound = Bottleneck::kMemoryBound;
  Bottleneck decode_bound = Bottleneck::kMemoryBound;
};

// Names of the constraints a candidate can fail on.
namespace constraint {
inline constexpr std::string_view kBudget = "budget";
inline constexpr std::string_view kMemory = "memory";
inline constexpr std::string_view kThroughputFloor = "throughput_floor";
inline constexpr std::string_view kLatencyCeiling = "latency_ceiling";
}  // namespace constraint

struct EngineConfig {
  std::uint64_t fleet_max = 8;
  bool flash_attention = true;
  double h2o_keep_ratio = kDefaultH2OKeepRatio;
  AnalyzerConfig analyzer;
  TimeModel time_model = TimeModel::kAdditive;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// One point of the search space.
struct Candidate {
  const HardwareSpec* gpu = nullptr;
  ParallelConfig config;
  Framework framework = Framework::kDynamicBatching;
  OptimizationFlags opts;
};

struct CandidateOutcome {
  std::optional<DeploymentPlan> plan;
  std::string rejected_by;  // constraint name when !plan
  std::vector<std::vector<Task>> replica_tasks;  // empty unless requested
};

struct PlanOutcome {
  std::vector<DeploymentPlan> plans;  // best first, at most 3
  std::string binding_constraint;     // set when plans is empty
  std::map<std::string, std::uint64_t> rejections;
  std::uint64_t candidates = 0;
};

// GPU memory left for KV after the tp-way model shard; nullopt if the shard
// does not fit.
std::optional<std::uint64_t> available_memory(const HardwareSpec& g, const ModelSpec& m,
                                              std::uint64_t tp);

struct Parallelism {
  std::uint64_t max_parallelism = 0;  // requests across all replicas
  std::uint64_t max_batch = 0;        // requests per replica
};

// dp * floor(available / kv per request) at worst-case residency
// prompt_len + output_len.
Parallelism max_parallelism(const HardwareSpec& g, const ModelSpec& m, std::uint64_t dp,
                            std::uint64_t tp, std::uint64_t prompt_len,
                            std::uint64_t output_len);

double ttft(const SimResult& sim);
double tpot(const SimResult& sim, std::uint64_t output_len);
double single_gpu_throughput(double tpot);
// N * T_single / (1 + log2 tp)
double multi_gpu_throughput(std::uint64_t n_gpus, double t_single, std::uint64_t tp);

// Search order of every candidate for the request, including those over
// budget (evaluate_candidate rejects them).
std::vector<Candidate> enumerate_candidates(const PlanRequest& req, const Catalog& catalog,
                                            const EngineConfig& cfg = {});

// Runs both steps for one candidate: memory feasibility and batch/sequence
// adjustment, then per-replica task generation, simulation and metrics.
CandidateOutcome evaluate_candidate(const PlanRequest& req, const ModelSpec& model,
                                    const Candidate& cand, const EngineConfig& cfg = {},
                                    bool keep_tasks = false);

// Strict weak order used for ranking: objective, then cost, GPU count and
// the remaining plan fields so that the order is total.
bool plan_better(const DeploymentPlan& a, const DeploymentPlan& b, Objective objective);

// Full search. Throws ValidationError / UnknownModelError.
PlanOutcome plan(const PlanRequest& req, const Catalog& catalog,
                 const EngineConfig& cfg = {});

}  // namespace llmplan
