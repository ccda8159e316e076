// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace llmplan {

// One GPU type. Throughput figures are per device.
struct HardwareSpec {
  std::string name;
  double peak_compute = 0.0;      // FLOP/s
  std::uint64_t memory_capacity = 0;  // bytes
  double memory_bandwidth = 0.0;  // bytes/s
  double comm_bandwidth = 0.0;    // bytes/s, inter-GPU
  double comm_latency = 0.0;      // seconds per message
  double unit_price = 0.0;        // currency units per device

  bool operator==(const HardwareSpec&) const = default;
};

// Dense decoder-only transformer architecture.
struct ModelSpec {
  std::string name;
  std::uint64_t num_layers = 0;
  std::uint64_t hidden_size = 0;
  std::uint64_t num_heads = 0;
  std::uint64_t num_kv_heads = 0;
  std::uint64_t ffn_size = 0;
  std::uint64_t vocab_size = 0;
  std::uint32_t weight_bytes = 2;  // bytes per parameter
  std::uint32_t kv_bytes = 2;      // bytes per cached K or V element
  std::optional<std::uint64_t> param_count_override;

  std::uint64_t head_dim() const { return hidden_size / num_heads; }
  // Width of the K (or V) projection; equals hidden_size without GQA.
  std::uint64_t kv_hidden_size() const { return head_dim() * num_kv_heads; }

  bool operator==(const ModelSpec&) const = default;
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(std::vector<HardwareSpec> gpus, std::vector<ModelSpec> models);

  const std::vector<HardwareSpec>& gpus() const { return gpus_; }
  const std::vector<ModelSpec>& models() const { return models_; }

  const HardwareSpec* find_gpu(std::string_view name) const;
  const ModelSpec* find_model(std::string_view name) const;

  bool empty() const { return gpus_.empty() && models_.empty(); }

  bool operator==(const Catalog&) const = default;

 private:
  std::vector<HardwareSpec> gpus_;
  std::vector<ModelSpec> models_;
};

// Raised for unreadable, malformed or invariant-violating catalog input.
// `record` identifies the offending record ("gpus[2] 'a100'" or a line
// reference) and `field` the offending key, when known.
class CatalogError : public std::runtime_error {
 public:
  CatalogError(std::string record, std::string field, const std::string& what);

  const std::string& record() const { return record_; }
  const std::string& field() const { return field_; }

 private:
  std::string record_;
  std::string field_;
};

void validate(const HardwareSpec& gpu);
void validate(const ModelSpec& model);

// Parses catalog text. A document may carry a `gpus:` list, a `models:`
// list, or both. `source` is used in error messages only.
Catalog parse_catalog(std::string_view text, std::string_view source = "<string>");

// Loads one catalog file.
Catalog load_catalog(const std::filesystem::path& path);

// Loads and merges a GPU file and a model file. Names must stay unique
// across both.
Catalog load_catalog(const std::filesystem::path& gpus_path,
                     const std::filesystem::path& models_path);

// Inverse of parse_catalog; values are written in shortest round-trip form.
std::string serialize_catalog(const Catalog& catalog);

// V*H + N*(4H^2 + 2HI) unless the record pins a published count.
std::uint64_t model_param_count(const ModelSpec& model);

std::uint64_t model_weight_bytes(const ModelSpec& model);

}  // namespace llmplan
