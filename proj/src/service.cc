// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/service.h"

#include "httplib.h"
#include "llmplan/wire.h"

namespace llmplan {

namespace {

HttpReply reply(int status, const wire::json& body) { return {status, body.dump()}; }

}  // namespace

PlanService::PlanService(Catalog catalog, EngineConfig config)
    : catalog_(std::move(catalog)), config_(std::move(config)) {}

HttpReply PlanService::plan(std::string_view body) const {
  wire::json parsed;
  try {
    parsed = wire::json::parse(body);
  } catch (const wire::json::parse_error& e) {
    return reply(400, wire::error_response(wire::code::kInvalidJson, e.what()));
  }
  try {
    const PlanRequest req = wire::parse_plan_request(parsed);
    return reply(200, wire::plan_response(llmplan::plan(req, catalog_, config_)));
  } catch (const ValidationError& e) {
    auto out = wire::error_response(wire::code::kValidation, e.what());
    out["error"]["field"] = e.field();
    return reply(422, out);
  } catch (const UnknownModelError& e) {
    return reply(404, wire::error_response(wire::code::kUnknownModel, e.what()));
  } catch (const std::exception& e) {
    return reply(500, wire::error_response(wire::code::kInternal, e.what()));
  }
}

HttpReply PlanService::catalog_listing(std::string_view kind) const {
  if (kind == "gpus") return reply(200, wire::gpu_listing(catalog_));
  if (kind == "models") return reply(200, wire::model_listing(catalog_));
  return not_found("/api/v1/catalog/" + std::string(kind));
}

HttpReply PlanService::not_found(std::string_view path) const {
  return reply(404, wire::error_response(wire::code::kNotFound,
                                         "no route for '" + std::string(path) + "'"));
}

void PlanService::mount(httplib::Server& server) const {
  const auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Post("/api/v1/plan", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, plan(req.body));
  });
  server.Get(R"(/api/v1/catalog/([^/]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, catalog_listing(req.matches[1].str()));
             });
  // Unmatched routes; keep bodies of handled errors untouched.
  server.set_error_handler([this, send](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) send(res, not_found(req.path));
  });
}

bool serve(const PlanService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  return server.listen(host, port);
}

}  // namespace llmplan
