// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/wire.h"

#include <cmath>
#include <set>

namespace llmplan::wire {

namespace {

const std::set<std::string, std::less<>> kRequestFields = {
    "model",          "budget",          "prompt_len",
    "output_len",     "batch_size",      "objective",
    "throughput_floor", "latency_ceiling", "precision_tolerance",
    "framework"};

const json* field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) return nullptr;
  return &*it;
}

const json& required(const json& body, const char* name) {
  const json* v = field(body, name);
  if (!v) throw ValidationError(name, std::string("missing required field '") + name + "'");
  return *v;
}

std::uint64_t positive_int(const json& v, const char* name) {
  if (!v.is_number_integer()) {
    throw ValidationError(name, std::string("'") + name + "' must be an integer");
  }
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u >= 1) return u;
  } else if (const auto i = v.get<std::int64_t>(); i >= 1) {
    return static_cast<std::uint64_t>(i);
  }
  throw ValidationError(name, std::string("'") + name + "' must be >= 1");
}

double number(const json& v, const char* name) {
  if (!v.is_number()) {
    throw ValidationError(name, std::string("'") + name + "' must be a number");
  }
  return v.get<double>();
}

std::string string_field(const json& v, const char* name) {
  if (!v.is_string()) {
    throw ValidationError(name, std::string("'") + name + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

PlanRequest parse_plan_request(const json& body) {
  if (!body.is_object()) throw ValidationError("", "request body must be a JSON object");
  for (const auto& [key, _] : body.items()) {
    if (!kRequestFields.count(key)) {
      throw ValidationError(key, "unknown field '" + key + "'");
    }
  }

  PlanRequest req;
  req.model = string_field(required(body, "model"), "model");
  req.budget = number(required(body, "budget"), "budget");
  req.prompt_len = positive_int(required(body, "prompt_len"), "prompt_len");
  req.output_len = positive_int(required(body, "output_len"), "output_len");
  if (const json* v = field(body, "batch_size")) req.batch_size = positive_int(*v, "batch_size");
  if (const json* v = field(body, "objective")) {
    auto o = parse_objective(string_field(*v, "objective"));
    if (!o) throw ValidationError("objective", "objective must be min_latency or max_throughput");
    req.objective = *o;
  }
  if (const json* v = field(body, "throughput_floor")) {
    req.throughput_floor = number(*v, "throughput_floor");
  }
  if (const json* v = field(body, "latency_ceiling")) {
    req.latency_ceiling = number(*v, "latency_ceiling");
  }
  if (const json* v = field(body, "precision_tolerance")) {
    auto p = parse_precision(string_field(*v, "precision_tolerance"));
    if (!p) throw ValidationError("precision_tolerance", "precision_tolerance must be strict or relaxed");
    req.precision = *p;
  }
  if (const json* v = field(body, "framework")) {
    const std::string s = string_field(*v, "framework");
    if (s != "search") {
      req.framework = parse_framework(s);
      if (!req.framework) {
        throw ValidationError("framework", "framework must be dyn_batching, split_fuse or search");
      }
    }
  }
  validate(req);
  return req;
}

json to_json(const PlanRequest& req) {
  json j = {
      {"model", req.model},
      {"budget", req.budget},
      {"prompt_len", req.prompt_len},
      {"output_len", req.output_len},
      {"batch_size", req.batch_size},
      {"objective", to_string(req.objective)},
      {"precision_tolerance", to_string(req.precision)},
      {"framework", req.framework ? to_string(*req.framework) : "search"},
  };
  if (req.throughput_floor) j["throughput_floor"] = *req.throughput_floor;
  if (req.latency_ceiling) j["latency_ceiling"] = *req.latency_ceiling;
  return j;
}

json to_json(const DeploymentPlan& p) {
  return {
      {"gpu", p.gpu},
      {"gpu_count", p.gpu_count},
      {"dp", p.dp},
      {"tp", p.tp},
      {"framework", to_string(p.framework)},
      {"h2o", p.h2o},
      {"adjusted_batch", p.adjusted_batch},
      {"adjusted_seq", p.adjusted_seq},
      {"cost", p.cost},
      {"metrics",
       {{"ttft", p.metrics.ttft},
        {"tpot", p.metrics.tpot},
        {"batch_latency", p.metrics.batch_latency},
        {"throughput", p.metrics.throughput},
        {"memory_per_gpu", p.metrics.memory_per_gpu}}},
      {"prefill_bound", to_string(p.prefill_bound)},
      {"decode_bound", to_string(p.decode_bound)},
  };
}

json plan_response(const PlanOutcome& outcome) {
  if (outcome.plans.empty()) {
    return error_response(code::kNoFeasiblePlan,
                          "no deployment plan satisfies the request; most candidates "
                          "failed on '" + outcome.binding_constraint + "'",
                          outcome.binding_constraint);
  }
  json plans = json::array();
  for (const auto& p : outcome.plans) plans.push_back(to_json(p));
  return {{"plans", std::move(plans)}};
}

json error_response(std::string_view code, std::string_view message,
                    std::string_view binding_constraint) {
  json err = {{"code", code}, {"message", message}};
  if (!binding_constraint.empty()) err["binding_constraint"] = binding_constraint;
  return {{"error", std::move(err)}};
}

json gpu_listing(const Catalog& catalog) {
  json list = json::array();
  for (const auto& g : catalog.gpus()) {
    list.push_back({{"name", g.name},
                    {"peak_compute", g.peak_compute},
                    {"memory_capacity", g.memory_capacity},
                    {"memory_bandwidth", g.memory_bandwidth},
                    {"comm_bandwidth", g.comm_bandwidth},
                    {"comm_latency", g.comm_latency},
                    {"unit_price", g.unit_price}});
  }
  return {{"gpus", std::move(list)}};
}

json model_listing(const Catalog& catalog) {
  json list = json::array();
  for (const auto& m : catalog.models()) {
    list.push_back({{"name", m.name},
                    {"num_layers", m.num_layers},
                    {"hidden_size", m.hidden_size},
                    {"num_heads", m.num_heads},
                    {"num_kv_heads", m.num_kv_heads},
                    {"param_count", model_param_count(m)},
                    {"weight_bytes", m.weight_bytes},
                    {"kv_bytes", m.kv_bytes}});
  }
  return {{"models", std::move(list)}};
}

json to_json(const Task& t) {
  return {{"phase", to_string(t.phase)},
          {"batch", t.batch},
          {"token_count", t.token_count},
          {"compute_load", t.compute_load},
          {"data_size", t.data_size},
          {"weight_bytes", t.weight_bytes},
          {"data_transferred", t.data_transferred},
          {"sync_payload_bytes", t.sync_payload_bytes},
          {"sync_layers", t.sync_layers}};
}

json task_list(std::span<const Task> tasks) {
  json list = json::array();
  for (const auto& t : tasks) list.push_back(to_json(t));
  return {{"tasks", std::move(list)}};
}

json timing_breakdown(std::span<const Task> tasks, const HardwareSpec& gpu, std::uint64_t tp,
                      TimeModel model) {
  json rows = json::array();
  std::size_t index = 0;
  for (const auto& t : tasks) {
    const TaskTiming tt = task_time(t, gpu, tp, model);
    rows.push_back({{"index", index++},
                    {"phase", to_string(t.phase)},
                    {"compute_s", tt.compute},
                    {"read_write_s", tt.read_write},
                    {"transfer_s", tt.transfer},
                    {"total_s", tt.total},
                    {"bound", to_string(tt.bound)}});
  }
  return {{"gpu", gpu.name}, {"tp", tp}, {"timings", std::move(rows)}};
}

}  // namespace llmplan::wire
