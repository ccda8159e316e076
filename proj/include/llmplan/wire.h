// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

// JSON wire format shared by the CLI (--json) and the HTTP service. The
// published JSON Schemas live in schemas/.

#pragma once

#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "llmplan/catalog.h"
#include "llmplan/inference_engine.h"
#include "llmplan/parallel_simulator.h"

namespace llmplan::wire {

using nlohmann::json;

namespace code {
inline constexpr std::string_view kValidation = "VALIDATION_ERROR";
inline constexpr std::string_view kInvalidJson = "INVALID_JSON";
inline constexpr std::string_view kUnknownModel = "UNKNOWN_MODEL";
inline constexpr std::string_view kNoFeasiblePlan = "NO_FEASIBLE_PLAN";
inline constexpr std::string_view kNotFound = "NOT_FOUND";
inline constexpr std::string_view kInternal = "INTERNAL";
}  // namespace code

// Validates and converts a request body. Unknown fields, wrong types and
// out-of-range values raise ValidationError naming the field.
PlanRequest parse_plan_request(const json& body);
json to_json(const PlanRequest& req);

json to_json(const DeploymentPlan& plan);

// {"plans": [...]} or {"error": {"code": "NO_FEASIBLE_PLAN", ...}}.
json plan_response(const PlanOutcome& outcome);

json error_response(std::string_view code, std::string_view message,
                    std::string_view binding_constraint = {});

json gpu_listing(const Catalog& catalog);
json model_listing(const Catalog& catalog);

// Debug dumps.
json to_json(const Task& task);
json task_list(std::span<const Task> tasks);
json timing_breakdown(std::span<const Task> tasks, const HardwareSpec& gpu, std::uint64_t tp,
                      TimeModel model = TimeModel::kAdditive);

}  // namespace llmplan::wire
