// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/model_analyzer.h"

#include <algorithm>
#include <cmath>

#include "llmplan/detail/checked.h"

namespace llmplan {

using detail::ceil_div;
using detail::checked_add;
using detail::checked_product;

std::string_view to_string(Framework f) {
  switch (f) {
    case Framework::kDynamicBatching:
      return "dyn_batching";
    case Framework::kSplitFuse:
      return "split_fuse";
  }
  return "?";
}

std::optional<Framework> parse_framework(std::string_view s) {
  if (s == "dyn_batching") return Framework::kDynamicBatching;
  if (s == "split_fuse") return Framework::kSplitFuse;
  return std::nullopt;
}

std::string_view to_string(Phase p) {
  return p == Phase::kPrefill ? "prefill" : "decode";
}

void OptimizationFlags::validate() const {
  if (!(h2o_keep_ratio > 0.0 && h2o_keep_ratio <= 1.0)) {
    throw std::invalid_argument("h2o_keep_ratio must be in (0, 1]");
  }
  if (!h2o && h2o_keep_ratio != 1.0) {
    throw std::invalid_argument("h2o_keep_ratio must be 1 when h2o is disabled");
  }
}

void WorkloadSpec::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (prompt_len < 1) throw std::invalid_argument("prompt_len must be >= 1");
  if (output_len < 1) throw std::invalid_argument("output_len must be >= 1");
  opts.validate();
}

std::uint64_t AnalyzerConfig::seq_chunk() const {
  const double scaled = std::round(static_cast<double>(seq_chunk_base) * seq_chunk_factor);
  return scaled < 1.0 ? 1 : static_cast<std::uint64_t>(scaled);
}

void AnalyzerConfig::validate() const {
  if (batch_split_size < 1) throw std::invalid_argument("batch_split_size must be >= 1");
  if (seq_chunk_base < 1 || !(seq_chunk_factor > 0.0)) {
    throw std::invalid_argument("sequence chunk must be positive");
  }
  if (token_budget < 1) throw std::invalid_argument("token_budget must be >= 1");
  if (kv_block_tokens < 1) throw std::invalid_argument("kv_block_tokens must be >= 1");
}

std::optional<MemoryBudget> MemoryBudget::make(std::uint64_t c_gpu,
                                               std::uint64_t c_model) {
  if (c_model > c_gpu) return std::nullopt;
  return MemoryBudget{c_gpu, c_model, c_gpu - c_model};
}

// --- KV accounting ---------------------------------------------------------

std::uint64_t kv_bytes_per_request(const ModelSpec& m, std::uint64_t seq_len,
                                   std::uint64_t batch) {
  return checked_product(
      {2, m.num_layers, m.kv_hidden_size(), seq_len, batch, m.kv_bytes});
}

std::uint64_t kv_bytes_without_batch(const ModelSpec& m, std::uint64_t seq_len) {
  return kv_bytes_per_request(m, seq_len, 1);
}

std::uint64_t kv_bytes_without_seqlen(const ModelSpec& m, std::uint64_t batch) {
  return kv_bytes_per_request(m, 1, batch);
}

std::uint64_t max_batch_size(const MemoryBudget& budget, const ModelSpec& m,
                             std::uint64_t seq_len) {
  return budget.c_available / kv_bytes_without_batch(m, seq_len);
}

std::uint64_t max_seq_len(const MemoryBudget& budget, const ModelSpec& m,
                          std::uint64_t batch) {
  return budget.c_available / kv_bytes_without_seqlen(m, batch);
}

std::vector<std::uint64_t> split_batch(std::uint64_t batch, std::uint64_t split_size) {
  if (split_size < 1) throw std::invalid_argument("split_size must be >= 1");
  std::vector<std::uint64_t> out;
  out.reserve(ceil_div(batch, split_size));
  for (std::uint64_t left = batch; left > 0;) {
    const std::uint64_t take = std::min(left, split_size);
    out.push_back(take);
    left -= take;
  }
  return out;
}

SequenceSplit split_sequence(std::uint64_t seq_len, std::uint64_t split_size) {
  if (split_size < 1) throw std::invalid_argument("split_size must be >= 1");
  const std::uint64_t n = ceil_div(seq_len, split_size);
  const std::uint64_t rounded = n * split_size;
  // Rounding up to whole chunks only changes the iteration count; the
  // billed length is never raised above the input.
  return {n, rounded <= seq_len ? rounded : seq_len};
}

std::uint64_t kv_residency_tokens(const WorkloadSpec& w, const AnalyzerConfig& cfg) {
  std::uint64_t tokens = checked_add(w.prompt_len, w.output_len);
  if (w.opts.h2o) {
    const auto kept = static_cast<std::uint64_t>(
        std::ceil(w.opts.h2o_keep_ratio * static_cast<double>(tokens)));
    tokens = std::max(w.prompt_len, kept);
  }
  if (cfg.paged_kv_blocks && w.framework == Framework::kDynamicBatching) {
    tokens = ceil_div(tokens, cfg.kv_block_tokens) * cfg.kv_block_tokens;
  }
  return tokens;
}

// --- Layer costs -----------------------------------------------------------

LayerCost pass_layer_cost(const ModelSpec& m, Phase phase, std::uint64_t batch,
                          std::uint64_t new_tokens, std::uint64_t past_tokens,
                          const OptimizationFlags& opts, const AnalyzerConfig& cfg) {
  const double b = static_cast<double>(batch);
  const double t = static_cast<double>(new_tokens);
  const double ctx = static_cast<double>(past_tokens + new_tokens);
  const double h = static_cast<double>(m.hidden_size);
  const double h_kv = static_cast<double>(m.kv_hidden_size());
  const double ffn = static_cast<double>(m.ffn_size);
  const double heads = static_cast<double>(m.num_heads);
  const double act = static_cast<double>(m.weight_bytes);
  const double kvb = static_cast<double>(m.kv_bytes);

  LayerCost c;
  c.linear_flops = 8.0 * b * t * h * h + 4.0 * b * t * h * ffn;
  c.attention_flops = 4.0 * b * t * ctx * h;

  c.weight_bytes = (4.0 * h * h + 2.0 * h * ffn) * act;
  // QKVO in/out (8), attention Q in / O out (2), FFN in/out (2 + 2).
  c.activation_bytes = (12.0 * b * t * h + 2.0 * b * t * ffn) * act;

  double kv_read = 2.0 * b * ctx * h_kv * kvb;
  if (phase == Phase::kDecode && opts.h2o) kv_read *= opts.h2o_keep_ratio;
  const double kv_write = 2.0 * b * t * h_kv * kvb;
  c.kv_bytes = kv_read + kv_write;

  if (!opts.flash_attention) {
    // Score matrix written by QK^T and read back by softmax * V.
    c.score_bytes = 2.0 * b * heads * t * ctx * static_cast<double>(cfg.score_bytes);
  }
  return c;
}

LayerCost layer_costs(const ModelSpec& m, Phase phase, std::uint64_t batch,
                      std::uint64_t context_len, const OptimizationFlags& opts,
                      const AnalyzerConfig& cfg) {
  if (phase == Phase::kPrefill) {
    return pass_layer_cost(m, phase, batch, context_len, 0, opts, cfg);
  }
  if (context_len < 1) throw std::invalid_argument("decode context must be >= 1");
  return pass_layer_cost(m, phase, batch, 1, context_len - 1, opts, cfg);
}

// --- Task generation -------------------------------------------------------

namespace {

// Weight bytes streamed by one forward pass. Uses the catalog's parameter
// count so a pinned published count is honored.
double pass_weight_bytes(const ModelSpec& m) {
  const double per_layer = (4.0 * m.hidden_size * static_cast<double>(m.hidden_size) +
                            2.0 * m.hidden_size * static_cast<double>(m.ffn_size)) *
                           m.weight_bytes;
  return std::max(static_cast<double>(model_weight_bytes(m)),
                  per_layer * static_cast<double>(m.num_layers));
}

// Accumulates the work of one pass (or one phase of a fused pass).
class PassBuilder {
 public:
  PassBuilder(const ModelSpec& m, Phase phase, const OptimizationFlags& opts,
              const AnalyzerConfig& cfg)
      : m_(m), phase_(phase), opts_(opts), cfg_(cfg) {}

  // `batch` identical requests, each adding `new_tokens` on top of
  // `past_tokens`; `sampled` of them emit a token at the end of the pass.
  void add(std::uint64_t batch, std::uint64_t new_tokens, std::uint64_t past_tokens,
           std::uint64_t sampled) {
    const LayerCost lc =
        pass_layer_cost(m_, phase_, batch, new_tokens, past_tokens, opts_, cfg_);
    const double layers = static_cast<double>(m_.num_layers);
    const double h = static_cast<double>(m_.hidden_size);
    const double act = static_cast<double>(m_.weight_bytes);
    const double tokens = static_cast<double>(batch * new_tokens);
    const double s = static_cast<double>(sampled);

    flops_ += layers * lc.flops() + 2.0 * s * h * static_cast<double>(m_.vocab_size);
    bytes_ += layers * (lc.bytes_rw() - lc.weight_bytes) + tokens * h * act +
              s * static_cast<double>(m_.vocab_size) * act;
    transferred_ += 4.0 * tokens + 4.0 * s;
    sync_payload_ += layers * tokens * h * act;
    batch_ += batch;
    tokens_ += phase_ == Phase::kPrefill ? batch * new_tokens : sampled;
  }

  bool empty() const { return batch_ == 0; }

  Task build(bool owns_weights) const {
    Task t;
    t.phase = phase_;
    t.batch = batch_;
    t.token_count = tokens_;
    t.compute_load = flops_;
    t.weight_bytes = owns_weights ? pass_weight_bytes(m_) : 0.0;
    t.data_size = bytes_ + t.weight_bytes;
    t.data_transferred = transferred_;
    t.sync_payload_bytes = sync_payload_;
    t.sync_layers = owns_weights ? m_.num_layers : 0;
    return t;
  }

 private:
  const ModelSpec& m_;
  Phase phase_;
  const OptimizationFlags& opts_;
  const AnalyzerConfig& cfg_;
  double flops_ = 0.0;
  double bytes_ = 0.0;
  double transferred_ = 0.0;
  double sync_payload_ = 0.0;
  std::uint64_t batch_ = 0;
  std::uint64_t tokens_ = 0;
};

void check_feasible(const ModelSpec& m, const WorkloadSpec& w,
                    const MemoryBudget& budget, const AnalyzerConfig& cfg) {
  if (max_seq_len(budget, m, w.batch_size) == 0) {
    throw InfeasibleError("max_seq_len",
                          "available memory cannot hold one token of KV cache "
                          "for the batch");
  }
  const std::uint64_t residency = kv_residency_tokens(w, cfg);
  const std::uint64_t b_max = max_batch_size(budget, m, residency);
  if (b_max == 0 || w.batch_size > b_max) {
    throw InfeasibleError("max_batch_size",
                          "available memory holds " + std::to_string(b_max) +
                              " request(s) at " + std::to_string(residency) +
                              " resident tokens, " + std::to_string(w.batch_size) +
                              " requested");
  }
}

std::vector<Task> dynamic_batching_tasks(const ModelSpec& m, const WorkloadSpec& w,
                                         const AnalyzerConfig& cfg) {
  std::vector<Task> tasks;
  for (std::uint64_t sub : split_batch(w.batch_size, cfg.batch_split_size)) {
    PassBuilder p(m, Phase::kPrefill, w.opts, cfg);
    p.add(sub, w.prompt_len, 0, 0);
    tasks.push_back(p.build(true));
  }
  for (std::uint64_t step = 1; step <= w.output_len; ++step) {
    PassBuilder d(m, Phase::kDecode, w.opts, cfg);
    d.add(w.batch_size, 1, w.prompt_len + step - 1, w.batch_size);
    tasks.push_back(d.build(true));
  }
  return tasks;
}

std::vector<Task> split_fuse_tasks(const ModelSpec& m, const WorkloadSpec& w,
                                   const AnalyzerConfig& cfg) {
  struct Request {
    std::uint64_t prefilled = 0;
    std::uint64_t generated = 0;
  };
  std::vector<Request> reqs(w.batch_size);
  const std::uint64_t chunk = cfg.seq_chunk();
  const std::uint64_t chunks_per_prompt = split_sequence(w.prompt_len, chunk).num_splits;

  std::vector<Task> tasks;
  tasks.reserve(w.batch_size * chunks_per_prompt + w.output_len + 1);
  std::uint64_t remaining_outputs = w.batch_size * w.output_len;

  while (remaining_outputs > 0) {
    std::uint64_t budget = cfg.token_budget;
    PassBuilder prefill(m, Phase::kPrefill, w.opts, cfg);
    PassBuilder decode(m, Phase::kDecode, w.opts, cfg);
    std::vector<std::uint64_t> finishing;

    // Decode tokens go first so in-flight generations are never starved.
    for (std::size_t i = 0; i < reqs.size() && budget > 0; ++i) {
      Request& r = reqs[i];
      if (r.prefilled < w.prompt_len || r.generated >= w.output_len) continue;
      decode.add(1, 1, w.prompt_len + r.generated, 1);
      finishing.push_back(i);
      --budget;
    }
    // Fill the remainder with at most one prompt chunk per request.
    for (Request& r : reqs) {
      if (budget == 0) break;
      if (r.prefilled >= w.prompt_len) continue;
      const std::uint64_t take = std::min({chunk, budget, w.prompt_len - r.prefilled});
      prefill.add(1, take, r.prefilled, 0);
      r.prefilled += take;
      budget -= take;
    }
    for (std::uint64_t i : finishing) ++reqs[i].generated;
    remaining_outputs -= finishing.size();

    // A fused iteration streams the weights once; the prefill half owns them.
    if (!prefill.empty()) tasks.push_back(prefill.build(true));
    if (!decode.empty()) tasks.push_back(decode.build(prefill.empty()));
  }
  return tasks;
}

}  // namespace

std::vector<Task> generate_task_list(const ModelSpec& m, const WorkloadSpec& w,
                                     const MemoryBudget& budget,
                                     const AnalyzerConfig& cfg) {
  w.validate();
  cfg.validate();
  check_feasible(m, w, budget, cfg);
  return w.framework == Framework::kDynamicBatching ? dynamic_batching_tasks(m, w, cfg)
                                                    : split_fuse_tasks(m, w, cfg);
}

}  // namespace llmplan
