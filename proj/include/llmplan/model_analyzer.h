// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "llmplan/catalog.h"

namespace llmplan {

// Request scheduling policy being modeled.
//   kDynamicBatching: vLLM-style. Whole prompts first (in sub-batches), then
//                     one decode iteration per output token for the batch.
//   kSplitFuse:       FastGen-style. Prompts are cut into chunks and packed,
//                     together with pending decode tokens, into iterations
//                     with a fixed token budget.
enum class Framework { kDynamicBatching, kSplitFuse };

std::string_view to_string(Framework f);
std::optional<Framework> parse_framework(std::string_view s);

enum class Phase { kPrefill, kDecode };

std::string_view to_string(Phase p);

inline constexpr double kDefaultH2OKeepRatio = 0.2;

struct OptimizationFlags {
  bool flash_attention = false;
  bool h2o = false;
  double h2o_keep_ratio = 1.0;  // fraction of KV kept; 1 unless h2o

  static OptimizationFlags with_h2o(double keep_ratio = kDefaultH2OKeepRatio,
                                    bool flash_attention = false) {
    return {flash_attention, true, keep_ratio};
  }

  // Throws std::invalid_argument on an out-of-range keep ratio.
  void validate() const;

  bool operator==(const OptimizationFlags&) const = default;
};

struct WorkloadSpec {
  std::uint64_t batch_size = 1;
  std::uint64_t prompt_len = 1;
  std::uint64_t output_len = 1;
  Framework framework = Framework::kDynamicBatching;
  OptimizationFlags opts;

  void validate() const;
};

// Tunables of the analyzer. Defaults follow FastGen-like settings.
struct AnalyzerConfig {
  std::uint64_t batch_split_size = 8;  // requests per prefill sub-batch
  std::uint64_t seq_chunk_base = 256;  // prompt chunk, before tuning
  double seq_chunk_factor = 1.0;
  std::uint64_t token_budget = 256;    // tokens per split-fuse iteration
  std::uint32_t score_bytes = 2;       // bytes per attention score element
  // Round KV residency up to whole paged blocks under dynamic batching.
  bool paged_kv_blocks = false;
  std::uint64_t kv_block_tokens = 16;

  std::uint64_t seq_chunk() const;
  void validate() const;
};

// One schedulable pass (or the decode half of a fused pass).
//
// `weight_bytes` is the part of `data_size` that does not depend on how
// many requests share the pass; the rest of `data_size`, `compute_load`,
// `data_transferred`, `sync_payload_bytes` and `token_count` scale with
// `batch`. The simulator relies on this split for data-parallel sharding.
struct Task {
  Phase phase = Phase::kPrefill;
  double compute_load = 0.0;      // FLOPs
  double data_size = 0.0;         // bytes read + written in device memory
  double data_transferred = 0.0;  // bytes moved host<->device
  std::uint64_t token_count = 0;  // prompt tokens processed / tokens generated
  std::uint64_t batch = 1;        // requests taking part
  double weight_bytes = 0.0;
  // Sum over layers of the activation bytes each tensor-parallel allreduce
  // carries (batch * tokens * hidden * act_bytes per layer).
  double sync_payload_bytes = 0.0;
  // Layers whose allreduces this task issues (0 when a fused partner task
  // already paid for them).
  std::uint64_t sync_layers = 0;

  bool operator==(const Task&) const = default;
};

struct MemoryBudget {
  std::uint64_t c_gpu = 0;
  std::uint64_t c_model = 0;
  std::uint64_t c_available = 0;

  // nullopt when the model slice alone does not fit.
  static std::optional<MemoryBudget> make(std::uint64_t c_gpu,
                                          std::uint64_t c_model);
  static MemoryBudget available_only(std::uint64_t c_available) {
    return {c_available, 0, c_available};
  }
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string limiting_quantity, const std::string& what)
      : std::runtime_error(what), limiting_quantity_(std::move(limiting_quantity)) {}
  const std::string& limiting_quantity() const { return limiting_quantity_; }

 private:
  std::string limiting_quantity_;
};

// ---------------------------------------------------------------------------
// KV-cache accounting. All results are exact integers; overflow throws
// std::overflow_error. The hidden width is the KV width, so for GQA models
// the result is scaled by num_kv_heads / num_heads.
// ---------------------------------------------------------------------------

// 2 * N * H_kv * S * B * kv
std::uint64_t kv_bytes_per_request(const ModelSpec& m, std::uint64_t seq_len,
                                   std::uint64_t batch);
// 2 * N * H_kv * S * kv
std::uint64_t kv_bytes_without_batch(const ModelSpec& m, std::uint64_t seq_len);
// 2 * N * H_kv * B * kv
std::uint64_t kv_bytes_without_seqlen(const ModelSpec& m, std::uint64_t batch);

// floor(c_available / kv_bytes_without_batch). 0 means infeasible.
std::uint64_t max_batch_size(const MemoryBudget& budget, const ModelSpec& m,
                             std::uint64_t seq_len);
// floor(c_available / kv_bytes_without_seqlen). 0 means infeasible.
std::uint64_t max_seq_len(const MemoryBudget& budget, const ModelSpec& m,
                          std::uint64_t batch);

inline std::uint64_t adjust_batch(std::uint64_t requested, std::uint64_t b_max) {
  return requested < b_max ? requested : b_max;
}
inline std::uint64_t adjust_seq_len(std::uint64_t requested, std::uint64_t s_max) {
  return requested < s_max ? requested : s_max;
}

// Greedy partition [split, split, ..., remainder].
std::vector<std::uint64_t> split_batch(std::uint64_t batch, std::uint64_t split_size);

struct SequenceSplit {
  std::uint64_t num_splits = 0;
  std::uint64_t adjusted_len = 0;  // never exceeds the input length
  bool operator==(const SequenceSplit&) const = default;
};
SequenceSplit split_sequence(std::uint64_t seq_len, std::uint64_t split_size);

// Worst-case per-request KV residency in tokens over the whole request:
// prompt + output, reduced by H2O eviction (never below the prompt, which
// is resident in full right after prefill), optionally rounded up to paged
// blocks for dynamic batching.
std::uint64_t kv_residency_tokens(const WorkloadSpec& w, const AnalyzerConfig& cfg = {});

// ---------------------------------------------------------------------------
// Per-layer cost model (2 FLOPs per multiply-add).
// ---------------------------------------------------------------------------

struct LayerCost {
  double linear_flops = 0.0;     // QKVO projections + FFN
  double attention_flops = 0.0;  // scores + weighted values
  double weight_bytes = 0.0;
  double activation_bytes = 0.0;
  double kv_bytes = 0.0;         // KV cache reads + writes
  double score_bytes = 0.0;      // materialized attention matrix traffic

  double flops() const { return linear_flops + attention_flops; }
  double bytes_rw() const {
    return weight_bytes + activation_bytes + kv_bytes + score_bytes;
  }
};

// One layer processing `new_tokens` per request for `batch` requests, each
// having `past_tokens` already cached.
LayerCost pass_layer_cost(const ModelSpec& m, Phase phase, std::uint64_t batch,
                          std::uint64_t new_tokens, std::uint64_t past_tokens,
                          const OptimizationFlags& opts,
                          const AnalyzerConfig& cfg = {});

// Prefill: `context_len` prompt tokens processed from scratch.
// Decode: one new token with `context_len` tokens of context including it.
LayerCost layer_costs(const ModelSpec& m, Phase phase, std::uint64_t batch,
                      std::uint64_t context_len, const OptimizationFlags& opts,
                      const AnalyzerConfig& cfg = {});

// Builds the prefill/decode task list for an already adjusted workload.
// Throws InfeasibleError when the budget cannot hold the workload's KV.
std::vector<Task> generate_task_list(const ModelSpec& m, const WorkloadSpec& w,
                                     const MemoryBudget& budget,
                                     const AnalyzerConfig& cfg = {});

}  // namespace llmplan
