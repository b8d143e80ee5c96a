#include "autorubric/service/http_server.hpp"

#include <chrono>

#include <httplib.h>

namespace autorubric::service {
namespace {

constexpr const char* kJsonType = "application/json";

std::string dump(const Json& j) { return dump_line(j); }

thread_local std::chrono::steady_clock::time_point request_start;

}  // namespace

Json error_body(const std::string& reason, const std::string& message) {
  Json j;
  j["error"] = reason;
  j["message"] = message;
  return j;
}

std::pair<int, std::string> handle_score_body(const RewardService& service, const std::string& body) {
  try {
    Json parsed;
    try {
      parsed = Json::parse(body);
    } catch (const Json::exception& e) {
      return {400, dump(error_body("malformed_request", std::string("invalid JSON: ") + e.what()))};
    }
    const auto request = score_request_from_json(parsed);
    return {200, dump(to_json(service.score(request)))};
  } catch (const ServiceError& e) {
    return {e.status(), dump(error_body(e.reason(), e.what()))};
  } catch (const Error& e) {
    return {500, dump(error_body("internal_error", e.what()))};
  }
}

HttpServer::HttpServer(std::shared_ptr<RewardService> service, ServerOptions options)
    : service_(std::move(service)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (!service_) throw InvariantViolation("http server needs a reward service");
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::log_line(const Json& entry) {
  if (!options_.log) return;
  std::lock_guard lock(log_mutex_);
  *options_.log << dump(entry) << '\n';
  options_.log->flush();
}

std::size_t HttpServer::reload_rubrics() {
  if (!options_.reload) throw InvariantViolation("no reload source configured");
  auto store = options_.reload();
  const auto count = store.size();
  service_->replace_store(std::move(store));
  return count;
}

void HttpServer::install_routes() {
  auto authorized = [this](const httplib::Request& req) {
    if (!options_.auth_token) return true;
    return req.get_header_value("Authorization") == "Bearer " + *options_.auth_token;
  };
  auto reply = [](httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, kJsonType);
  };
  auto unauthorized = [reply](httplib::Response& res) {
    reply(res, 401, dump(error_body("unauthorized", "missing or wrong bearer token")));
  };

  server_->Post("/v1/score", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req)) return unauthorized(res);
    const auto [status, body] = handle_score_body(*service_, req.body);
    reply(res, status, body);
  });

  server_->Get(R"(/v1/rubrics/(.+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req)) return unauthorized(res);
    const std::string problem_id = req.matches[1];
    const auto lookup = service_->rubrics(problem_id);
    switch (lookup.status) {
      case RubricLookupStatus::kFound: return reply(res, 200, dump(to_json(*lookup.set)));
      case RubricLookupStatus::kNoRubric:
        return reply(res, 404, dump(error_body("no_rubric", "no rubric set was built for '" + problem_id + "'")));
      case RubricLookupStatus::kUnknownProblem:
        return reply(res, 404, dump(error_body("unknown_problem", "unknown problem_id '" + problem_id + "'")));
    }
  });

  server_->Get("/v1/health", [=, this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, dump(to_json(service_->health())));
  });

  server_->Post("/v1/admin/reload-rubrics", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!options_.auth_token) {
      return reply(res, 403, dump(error_body("reload_disabled", "no admin token configured")));
    }
    if (!authorized(req)) return unauthorized(res);
    try {
      const auto count = reload_rubrics();
      reply(res, 200, dump(Json{{"rubric_count", count}}));
    } catch (const Error& e) {
      reply(res, 500, dump(error_body("reload_failed", e.what())));
    }
  });

  // httplib runs routing and logging for one request on the same thread.
  server_->set_pre_routing_handler([](const httplib::Request&, httplib::Response&) {
    request_start = std::chrono::steady_clock::now();
    return httplib::Server::HandlerResponse::Unhandled;
  });

  server_->set_logger([this](const httplib::Request& req, const httplib::Response& res) {
    Json entry;
    entry["method"] = req.method;
    entry["path"] = req.path;
    entry["status"] = res.status;
    entry["duration_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - request_start).count();
    entry["request_bytes"] = req.body.size();
    entry["response_bytes"] = res.body.size();
    log_line(entry);
  });
}

int HttpServer::bind() {
  if (options_.port == 0) {
    bound_port_ = server_->bind_to_any_port(options_.host);
  } else if (server_->bind_to_port(options_.host, options_.port)) {
    bound_port_ = options_.port;
  } else {
    bound_port_ = -1;
  }
  if (bound_port_ < 0) {
    throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return bound_port_;
}

void HttpServer::listen() {
  if (bound_port_ < 0) bind();
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_) server_->stop();
}

bool HttpServer::running() const { return server_ && server_->is_running(); }

}  // namespace autorubric::service
