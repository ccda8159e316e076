// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/catalog.h"

#include <yaml-cpp/yaml.h>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "llmplan/detail/checked.h"

namespace llmplan {

using detail::checked_add;
using detail::checked_mul;
using detail::checked_product;

CatalogError::CatalogError(std::string record, std::string field,
                           const std::string& what)
    : std::runtime_error(what), record_(std::move(record)),
      field_(std::move(field)) {}

Catalog::Catalog(std::vector<HardwareSpec> gpus, std::vector<ModelSpec> models)
    : gpus_(std::move(gpus)), models_(std::move(models)) {
  std::set<std::string> seen;
  for (const auto& g : gpus_) {
    validate(g);
    if (!seen.insert(g.name).second) {
      throw CatalogError(g.name, "name", "duplicate name '" + g.name + "'");
    }
  }
  for (const auto& m : models_) {
    validate(m);
    if (!seen.insert(m.name).second) {
      throw CatalogError(m.name, "name", "duplicate name '" + m.name + "'");
    }
  }
}

const HardwareSpec* Catalog::find_gpu(std::string_view name) const {
  auto it = std::find_if(gpus_.begin(), gpus_.end(),
                         [&](const HardwareSpec& g) { return g.name == name; });
  return it == gpus_.end() ? nullptr : &*it;
}

const ModelSpec* Catalog::find_model(std::string_view name) const {
  auto it = std::find_if(models_.begin(), models_.end(),
                         [&](const ModelSpec& m) { return m.name == name; });
  return it == models_.end() ? nullptr : &*it;
}

namespace {

void require_positive(const std::string& record, const char* field, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw CatalogError(record, field,
                       fmt::format("{}: field '{}' must be a finite value > 0",
                                   record, field));
  }
}

void require_nonempty_name(const std::string& name) {
  if (name.empty()) {
    throw CatalogError("<unnamed>", "name", "record is missing a name");
  }
}

}  // namespace

void validate(const HardwareSpec& g) {
  require_nonempty_name(g.name);
  require_positive(g.name, "peak_compute", g.peak_compute);
  require_positive(g.name, "memory_capacity",
                   static_cast<double>(g.memory_capacity));
  require_positive(g.name, "memory_bandwidth", g.memory_bandwidth);
  require_positive(g.name, "comm_bandwidth", g.comm_bandwidth);
  require_positive(g.name, "comm_latency", g.comm_latency);
  require_positive(g.name, "unit_price", g.unit_price);
}

void validate(const ModelSpec& m) {
  require_nonempty_name(m.name);
  require_positive(m.name, "num_layers", static_cast<double>(m.num_layers));
  require_positive(m.name, "hidden_size", static_cast<double>(m.hidden_size));
  require_positive(m.name, "num_heads", static_cast<double>(m.num_heads));
  require_positive(m.name, "num_kv_heads", static_cast<double>(m.num_kv_heads));
  require_positive(m.name, "ffn_size", static_cast<double>(m.ffn_size));
  require_positive(m.name, "vocab_size", static_cast<double>(m.vocab_size));
  require_positive(m.name, "weight_bytes", m.weight_bytes);
  require_positive(m.name, "kv_bytes", m.kv_bytes);
  if (m.param_count_override) {
    require_positive(m.name, "param_count",
                     static_cast<double>(*m.param_count_override));
  }
  if (m.num_heads % m.num_kv_heads != 0) {
    throw CatalogError(m.name, "num_kv_heads",
                       fmt::format("{}: num_kv_heads ({}) must divide num_heads ({})",
                                   m.name, m.num_kv_heads, m.num_heads));
  }
  if (m.hidden_size % m.num_heads != 0) {
    throw CatalogError(m.name, "hidden_size",
                       fmt::format("{}: hidden_size ({}) must be divisible by "
                                   "num_heads ({})",
                                   m.name, m.hidden_size, m.num_heads));
  }
}

namespace {

// Record reader that remembers which keys were consumed so that typos are
// reported rather than silently ignored.
class RecordReader {
 public:
  RecordReader(const YAML::Node& node, std::string record)
      : node_(node), record_(std::move(record)) {
    if (!node_.IsMap()) {
      throw CatalogError(record_, "", record_ + ": record must be a mapping");
    }
  }

  const std::string& record() const { return record_; }

  std::string str(const char* key) {
    return scalar(key, /*required=*/true).value();
  }

  double number(const char* key) {
    const std::string s = scalar(key, true).value();
    return parse_double(key, s);
  }

  std::uint64_t count(const char* key) {
    return parse_count(key, scalar(key, true).value());
  }

  std::optional<std::uint64_t> optional_count(const char* key) {
    auto s = scalar(key, false);
    if (!s) return std::nullopt;
    return parse_count(key, *s);
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) {
        throw CatalogError(record_, key,
                           fmt::format("{}: unknown field '{}'", record_, key));
      }
    }
  }

 private:
  std::optional<std::string> scalar(const char* key, bool required) {
    used_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) {
      if (!required) return std::nullopt;
      throw CatalogError(record_, key,
                         fmt::format("{}: missing field '{}'", record_, key));
    }
    if (!v.IsScalar()) {
      throw CatalogError(record_, key,
                         fmt::format("{}: field '{}' must be a scalar", record_, key));
    }
    return v.Scalar();
  }

  double parse_double(const char* key, const std::string& s) const {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw CatalogError(record_, key,
                         fmt::format("{}: field '{}' is not a number: '{}'",
                                     record_, key, s));
    }
    return out;
  }

  std::uint64_t parse_count(const char* key, const std::string& s) const {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size()) return out;
    // Accept scientific notation ("7e9") when it denotes an exact integer.
    const double d = parse_double(key, s);
    if (d < 0.0 || d != std::floor(d) || d >= 18446744073709551616.0) {
      throw CatalogError(record_, key,
                         fmt::format("{}: field '{}' must be a non-negative "
                                     "integer: '{}'",
                                     record_, key, s));
    }
    return static_cast<std::uint64_t>(d);
  }

  const YAML::Node& node_;
  std::string record_;
  std::set<std::string> used_;
};

std::string record_label(std::string_view source, const char* section,
                         std::size_t index, const YAML::Node& node) {
  std::string label = fmt::format("{}: {}[{}] (line {})", source, section,
                                  index, node.Mark().line + 1);
  if (node.IsMap() && node["name"] && node["name"].IsScalar()) {
    label += fmt::format(" '{}'", node["name"].Scalar());
  }
  return label;
}

std::uint32_t narrow_u32(const RecordReader& r, const char* key,
                         std::uint64_t v) {
  if (v > UINT32_MAX) {
    throw CatalogError(r.record(), key,
                       fmt::format("{}: field '{}' out of range", r.record(), key));
  }
  return static_cast<std::uint32_t>(v);
}

HardwareSpec read_gpu(RecordReader& r) {
  HardwareSpec g;
  g.name = r.str("name");
  g.peak_compute = r.number("peak_compute");
  g.memory_capacity = r.count("memory_capacity");
  g.memory_bandwidth = r.number("memory_bandwidth");
  g.comm_bandwidth = r.number("comm_bandwidth");
  g.comm_latency = r.number("comm_latency");
  g.unit_price = r.number("unit_price");
  r.finish();
  try {
    validate(g);
  } catch (const CatalogError& e) {
    throw CatalogError(r.record(), e.field(),
                       fmt::format("{}: field '{}' must be a finite value > 0",
                                   r.record(), e.field()));
  }
  return g;
}

ModelSpec read_model(RecordReader& r) {
  ModelSpec m;
  m.name = r.str("name");
  m.num_layers = r.count("num_layers");
  m.hidden_size = r.count("hidden_size");
  m.num_heads = r.count("num_heads");
  m.num_kv_heads = r.count("num_kv_heads");
  m.ffn_size = r.count("ffn_size");
  m.vocab_size = r.count("vocab_size");
  m.weight_bytes = narrow_u32(r, "weight_bytes", r.count("weight_bytes"));
  m.kv_bytes = narrow_u32(r, "kv_bytes", r.count("kv_bytes"));
  m.param_count_override = r.optional_count("param_count");
  r.finish();
  try {
    validate(m);
  } catch (const CatalogError& e) {
    throw CatalogError(r.record(), e.field(),
                       fmt::format("{} -- {}", r.record(), e.what()));
  }
  return m;
}

}  // namespace

Catalog parse_catalog(std::string_view text, std::string_view source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw CatalogError(fmt::format("{}: line {}", source, e.mark.line + 1), "",
                       fmt::format("{}: line {}: parse error: {}", source,
                                   e.mark.line + 1, e.msg));
  }
  if (!root.IsMap()) {
    throw CatalogError(std::string(source), "",
                       fmt::format("{}: expected a mapping with 'gpus' and/or "
                                   "'models' lists",
                                   source));
  }

  std::vector<HardwareSpec> gpus;
  std::vector<ModelSpec> models;
  for (const auto& kv : root) {
    const auto section = kv.first.as<std::string>();
    if (section != "gpus" && section != "models") {
      throw CatalogError(std::string(source), section,
                         fmt::format("{}: unknown section '{}'", source, section));
    }
    if (kv.second.IsNull()) continue;
    if (!kv.second.IsSequence()) {
      throw CatalogError(std::string(source), section,
                         fmt::format("{}: '{}' must be a list", source, section));
    }
    std::size_t index = 0;
    for (const auto& node : kv.second) {
      RecordReader reader(node, record_label(source, section.c_str(), index++, node));
      if (section == "gpus") {
        gpus.push_back(read_gpu(reader));
      } else {
        models.push_back(read_model(reader));
      }
    }
  }
  return Catalog(std::move(gpus), std::move(models));
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CatalogError(path.string(), "", "cannot open catalog file '" +
                                              path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Catalog load_catalog(const std::filesystem::path& path) {
  Catalog c = parse_catalog(read_file(path), path.string());
  if (c.empty()) {
    throw CatalogError(path.string(), "", path.string() + ": catalog is empty");
  }
  return c;
}

Catalog load_catalog(const std::filesystem::path& gpus_path,
                     const std::filesystem::path& models_path) {
  Catalog a = parse_catalog(read_file(gpus_path), gpus_path.string());
  Catalog b = parse_catalog(read_file(models_path), models_path.string());
  std::vector<HardwareSpec> gpus = a.gpus();
  gpus.insert(gpus.end(), b.gpus().begin(), b.gpus().end());
  std::vector<ModelSpec> models = a.models();
  models.insert(models.end(), b.models().begin(), b.models().end());
  Catalog merged(std::move(gpus), std::move(models));
  if (merged.empty()) {
    throw CatalogError(gpus_path.string(), "", "catalog is empty");
  }
  return merged;
}

std::string serialize_catalog(const Catalog& catalog) {
  std::string out;
  if (!catalog.gpus().empty()) {
    out += "gpus:\n";
    for (const auto& g : catalog.gpus()) {
      out += fmt::format("  - name: \"{}\"\n", g.name);
      out += fmt::format("    peak_compute: {}\n", g.peak_compute);
      out += fmt::format("    memory_capacity: {}\n", g.memory_capacity);
      out += fmt::format("    memory_bandwidth: {}\n", g.memory_bandwidth);
      out += fmt::format("    comm_bandwidth: {}\n", g.comm_bandwidth);
      out += fmt::format("    comm_latency: {}\n", g.comm_latency);
      out += fmt::format("    unit_price: {}\n", g.unit_price);
    }
  }
  if (!catalog.models().empty()) {
    out += "models:\n";
    for (const auto& m : catalog.models()) {
      out += fmt::format("  - name: \"{}\"\n", m.name);
      out += fmt::format("    num_layers: {}\n", m.num_layers);
      out += fmt::format("    hidden_size: {}\n", m.hidden_size);
      out += fmt::format("    num_heads: {}\n", m.num_heads);
      out += fmt::format("    num_kv_heads: {}\n", m.num_kv_heads);
      out += fmt::format("    ffn_size: {}\n", m.ffn_size);
      out += fmt::format("    vocab_size: {}\n", m.vocab_size);
      out += fmt::format("    weight_bytes: {}\n", m.weight_bytes);
      out += fmt::format("    kv_bytes: {}\n", m.kv_bytes);
      if (m.param_count_override) {
        out += fmt::format("    param_count: {}\n", *m.param_count_override);
      }
    }
  }
  return out;
}

std::uint64_t model_param_count(const ModelSpec& m) {
  if (m.param_count_override) return *m.param_count_override;
  const std::uint64_t h = m.hidden_size;
  const std::uint64_t embed = checked_mul(m.vocab_size, h);
  const std::uint64_t per_layer =
      checked_add(checked_product({4, h, h}), checked_product({2, h, m.ffn_size}));
  return checked_add(embed, checked_mul(m.num_layers, per_layer));
}

std::uint64_t model_weight_bytes(const ModelSpec& m) {
  return checked_mul(model_param_count(m), m.weight_bytes);
}

}  // namespace llmplan
