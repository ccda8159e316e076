// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "llmplan/catalog.h"
#include "llmplan/inference_engine.h"

namespace httplib {
class Server;
}

namespace llmplan {

struct HttpReply {
  int status = 200;
  std::string body;  // application/json
};

// Stateless HTTP front end for the planner. Handlers only read the catalog,
// so one instance may serve concurrent requests.
//
//   POST /api/v1/plan            body: plan request  -> plans | error
//   GET  /api/v1/catalog/gpus                        -> {"gpus": [...]}
//   GET  /api/v1/catalog/models                      -> {"models": [...]}
class PlanService {
 public:
  PlanService(Catalog catalog, EngineConfig config);

  // 200 plans, 200 NO_FEASIBLE_PLAN, 400 malformed JSON, 404 unknown
  // model, 422 validation failure.
  HttpReply plan(std::string_view body) const;
  // kind is "gpus" or "models"; anything else is 404.
  HttpReply catalog_listing(std::string_view kind) const;
  HttpReply not_found(std::string_view path) const;

  void mount(httplib::Server& server) const;

  const Catalog& catalog() const { return catalog_; }

 private:
  Catalog catalog_;
  EngineConfig config_;
};

// Blocks serving on host:port until the server is stopped.
bool serve(const PlanService& service, const std::string& host, int port);

}  // namespace llmplan
