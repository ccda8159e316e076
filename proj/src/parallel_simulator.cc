// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/parallel_simulator.h"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace llmplan {

void ParallelConfig::validate() const {
  if (dp < 1 || tp < 1) throw std::invalid_argument("dp and tp must be >= 1");
  if (!std::has_single_bit(tp)) {
    throw std::invalid_argument("tp must be a power of two, got " + std::to_string(tp));
  }
}

std::string_view to_string(Bottleneck b) {
  switch (b) {
    case Bottleneck::kComputeBound:
      return "compute_bound";
    case Bottleneck::kMemoryBound:
      return "memory_bound";
    case Bottleneck::kCommBound:
      return "comm_bound";
  }
  return "?";
}

double compute_time(const Task& t, const HardwareSpec& g, std::uint64_t tp) {
  return (t.compute_load / static_cast<double>(tp)) / g.peak_compute;
}

double rw_time(const Task& t, const HardwareSpec& g, std::uint64_t tp) {
  return (t.data_size / static_cast<double>(tp)) / g.memory_bandwidth;
}

double tp_sync_bytes(const Task& t, std::uint64_t tp) {
  if (tp <= 1) return 0.0;
  const double n = static_cast<double>(tp);
  return 2.0 * (2.0 * (n - 1.0) / n) * t.sync_payload_bytes;
}

std::uint64_t tp_sync_messages(const Task& t, std::uint64_t tp) {
  if (tp <= 1) return 0;
  // ceil(log2 tp); tp is a power of two in practice.
  const auto log2_tp = static_cast<std::uint64_t>(std::bit_width(tp - 1));
  return 2 * t.sync_layers * log2_tp;
}

double transfer_time(const Task& t, const HardwareSpec& g, std::uint64_t tp) {
  return (t.data_transferred + tp_sync_bytes(t, tp)) / g.comm_bandwidth +
         static_cast<double>(tp_sync_messages(t, tp)) * g.comm_latency;
}

TaskTiming task_time(const Task& t, const HardwareSpec& g, std::uint64_t tp,
                     TimeModel model) {
  TaskTiming out;
  out.compute = compute_time(t, g, tp);
  out.read_write = rw_time(t, g, tp);
  out.transfer = transfer_time(t, g, tp);
  out.total = model == TimeModel::kAdditive
                  ? out.compute + out.read_write + out.transfer
                  : std::max(out.compute, out.read_write) + out.transfer;
  out.bound = out.compute >= out.read_write ? Bottleneck::kComputeBound
                                            : Bottleneck::kMemoryBound;
  return out;
}

std::vector<ParallelConfig> get_configurations(std::uint64_t num_gpus) {
  std::vector<ParallelConfig> out;
  for (std::uint64_t dp = 1; dp <= num_gpus; ++dp) {
    for (std::uint64_t tp = 1; dp * tp <= num_gpus; tp *= 2) {
      out.push_back({dp, tp});
    }
  }
  return out;
}

std::vector<std::uint64_t> near_equal_shards(std::uint64_t n, std::uint64_t parts) {
  if (parts < 1) throw std::invalid_argument("parts must be >= 1");
  std::vector<std::uint64_t> out(parts, n / parts);
  for (std::uint64_t i = 0; i < n % parts; ++i) ++out[i];
  return out;
}

Task shard_task(const Task& t, std::uint64_t shard) {
  if (t.batch == 0 || shard > t.batch) {
    throw std::invalid_argument("shard must be within the task batch");
  }
  if (shard == t.batch) return t;
  const double f = static_cast<double>(shard) / static_cast<double>(t.batch);
  Task s = t;
  s.batch = shard;
  s.compute_load = t.compute_load * f;
  s.data_size = t.weight_bytes + (t.data_size - t.weight_bytes) * f;
  s.data_transferred = t.data_transferred * f;
  s.sync_payload_bytes = t.sync_payload_bytes * f;
  s.token_count = t.token_count * shard / t.batch;
  return s;
}

namespace {

struct PhaseTotals {
  double time = 0.0;
  double compute = 0.0;
  double read_write = 0.0;
  double transfer = 0.0;
  bool any = false;

  void add(const TaskTiming& tt) {
    time += tt.total;
    compute += tt.compute;
    read_write += tt.read_write;
    transfer += tt.transfer;
    any = true;
  }

  Bottleneck bound() const {
    if (transfer > compute && transfer > read_write) return Bottleneck::kCommBound;
    return compute >= read_write ? Bottleneck::kComputeBound : Bottleneck::kMemoryBound;
  }
};

}  // namespace

SimResult simulate_replicas(std::span<const std::vector<Task>> replica_tasks,
                            std::uint64_t tp, const HardwareSpec& g,
                            const SimOptions& opts) {
  const ParallelConfig cfg{replica_tasks.size(), tp};
  cfg.validate();
  if (opts.fleet_size != 0 && cfg.gpus_used() > opts.fleet_size) {
    throw std::invalid_argument("configuration uses " + std::to_string(cfg.gpus_used()) +
                                " GPUs, fleet has " + std::to_string(opts.fleet_size));
  }

  PhaseTotals prefill_max, decode_max;
  bool any_prefill = false, any_decode = false;
  for (const auto& tasks : replica_tasks) {
    PhaseTotals prefill, decode;
    for (const Task& t : tasks) {
      (t.phase == Phase::kPrefill ? prefill : decode).add(task_time(t, g, tp, opts.time_model));
    }
    any_prefill |= prefill.any;
    any_decode |= decode.any;
    // Stragglers dominate: keep the slowest replica per phase.
    if (prefill.time > prefill_max.time || !prefill_max.any) prefill_max = prefill;
    if (decode.time > decode_max.time || !decode_max.any) decode_max = decode;
  }
  if (!any_prefill && !any_decode) throw std::invalid_argument("task list is empty");

  const double dp_sync = cfg.dp > 1 ? g.comm_latency : 0.0;
  SimResult r;
  r.config = cfg;
  r.prefill_time = any_prefill ? prefill_max.time + dp_sync : 0.0;
  r.decode_time = any_decode ? decode_max.time + dp_sync : 0.0;
  r.total_time = r.prefill_time + r.decode_time;
  r.prefill_bound = prefill_max.bound();
  r.decode_bound = decode_max.bound();
  r.prefill_comm_time = prefill_max.transfer;
  r.decode_comm_time = decode_max.transfer;
  return r;
}

SimResult simulate_hybrid(std::span<const Task> tasks, const ParallelConfig& cfg,
                          const HardwareSpec& g, const SimOptions& opts) {
  cfg.validate();
  if (tasks.empty()) throw std::invalid_argument("task list is empty");
  std::vector<std::vector<Task>> replicas(cfg.dp);
  for (const Task& t : tasks) {
    const auto shards = near_equal_shards(t.batch, cfg.dp);
    for (std::size_t r = 0; r < shards.size(); ++r) {
      if (shards[r] > 0) replicas[r].push_back(shard_task(t, shards[r]));
    }
  }
  return simulate_replicas(replicas, cfg.tp, g, opts);
}

std::vector<SimResult> rank_configs(std::vector<SimResult> results, std::size_t k) {
  std::sort(results.begin(), results.end(), [](const SimResult& a, const SimResult& b) {
    if (a.total_time != b.total_time) return a.total_time < b.total_time;
    if (a.config.gpus_used() != b.config.gpus_used()) {
      return a.config.gpus_used() < b.config.gpus_used();
    }
    if (a.config.tp != b.config.tp) return a.config.tp < b.config.tp;
    return a.config.dp < b.config.dp;
  });
  if (results.size() > k) results.resize(k);
  return results;
}

std::vector<SimResult> simulate_all(std::span<const Task> tasks, std::uint64_t num_gpus,
                                    const HardwareSpec& g, std::size_t k,
                                    const SimOptions& opts) {
  std::vector<SimResult> results;
  for (const auto& cfg : get_configurations(num_gpus)) {
    results.push_back(simulate_hybrid(tasks, cfg, g, opts));
  }
  return rank_configs(std::move(results), k);
}

}  // namespace llmplan
