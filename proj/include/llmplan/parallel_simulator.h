// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "llmplan/catalog.h"
#include "llmplan/model_analyzer.h"

namespace llmplan {

// Hybrid data x tensor parallel layout. tp must be a power of two.
struct ParallelConfig {
  std::uint64_t dp = 1;
  std::uint64_t tp = 1;

  std::uint64_t gpus_used() const { return dp * tp; }
  void validate() const;  // throws std::invalid_argument

  bool operator==(const ParallelConfig&) const = default;
  auto operator<=>(const ParallelConfig&) const = default;
};

enum class Bottleneck { kComputeBound, kMemoryBound, kCommBound };
std::string_view to_string(Bottleneck b);

// How the three per-task time components combine.
//   kAdditive: compute + read/write + transfer.
//   kOverlap:  max(compute, read/write) + transfer (classic roofline with
//              compute and memory traffic fully overlapped).
enum class TimeModel { kAdditive, kOverlap };

struct SimOptions {
  TimeModel time_model = TimeModel::kAdditive;
  std::uint64_t fleet_size = 0;  // GPUs available; 0 = unchecked
};

struct TaskTiming {
  double compute = 0.0;
  double read_write = 0.0;
  double transfer = 0.0;
  double total = 0.0;
  // Compute-bound iff compute time >= read/write time.
  Bottleneck bound = Bottleneck::kMemoryBound;
};

struct SimResult {
  ParallelConfig config;
  double total_time = 0.0;
  double prefill_time = 0.0;
  double decode_time = 0.0;
  Bottleneck prefill_bound = Bottleneck::kMemoryBound;
  Bottleneck decode_bound = Bottleneck::kMemoryBound;
  // Summed transfer seconds of the slowest replica, per phase.
  double prefill_comm_time = 0.0;
  double decode_comm_time = 0.0;
};

// (load / tp) / peak_compute
double compute_time(const Task& t, const HardwareSpec& g, std::uint64_t tp);
// (data_size / tp) / memory_bandwidth
double rw_time(const Task& t, const HardwareSpec& g, std::uint64_t tp);
// Ring-allreduce volume: 2 allreduces per layer, each moving
// 2 (tp - 1) / tp of the payload. Zero for tp = 1.
double tp_sync_bytes(const Task& t, std::uint64_t tp);
// 2 * layers * ceil(log2 tp) messages.
std::uint64_t tp_sync_messages(const Task& t, std::uint64_t tp);
// (transferred + sync bytes) / comm_bandwidth + messages * comm_latency
double transfer_time(const Task& t, const HardwareSpec& g, std::uint64_t tp);

TaskTiming task_time(const Task& t, const HardwareSpec& g, std::uint64_t tp,
                     TimeModel model = TimeModel::kAdditive);

// All (dp, tp) with tp a power of two and dp * tp <= num_gpus, ordered by
// dp then tp.
std::vector<ParallelConfig> get_configurations(std::uint64_t num_gpus);

// Near-equal split of n into parts (larger parts first).
std::vector<std::uint64_t> near_equal_shards(std::uint64_t n, std::uint64_t parts);

// Scales the batch-proportional parts of a task down to `shard` requests.
Task shard_task(const Task& t, std::uint64_t shard);

// Runs the task list with every task's batch split across cfg.dp replicas.
// Replicas run concurrently: a phase takes as long as its slowest replica,
// plus one DP synchronization latency when dp > 1.
SimResult simulate_hybrid(std::span<const Task> tasks, const ParallelConfig& cfg,
                          const HardwareSpec& g, const SimOptions& opts = {});

// Same timing rules, with an explicit task list per replica (replicas may
// schedule their own share of requests). replica_tasks.size() is the dp.
SimResult simulate_replicas(std::span<const std::vector<Task>> replica_tasks,
                            std::uint64_t tp, const HardwareSpec& g,
                            const SimOptions& opts = {});

// Ascending total time; ties go to fewer GPUs, then lower tp.
std::vector<SimResult> rank_configs(std::vector<SimResult> results, std::size_t k = 3);

// Evaluates every configuration for num_gpus and returns the ranked top k.
std::vector<SimResult> simulate_all(std::span<const Task> tasks, std::uint64_t num_gpus,
                                    const HardwareSpec& g, std::size_t k = 3,
                                    const SimOptions& opts = {});

}  // namespace llmplan
