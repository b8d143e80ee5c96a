#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>

#include "autorubric/service/reward_service.hpp"

namespace httplib {
class Server;
}

namespace autorubric::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> auth_token;
  // Returns the store to swap in on a reload request.
  std::function<forge::RubricStore()> reload;
  std::ostream* log = nullptr;  // one JSON line per request; nullptr disables logging
};

/// HTTP front end for a RewardService.
///
///   POST /v1/score                     ScoreBatchRequest -> ScoreBatchResponse
///   GET  /v1/rubrics/{problem_id}      RubricSet, or 404 {"error": "no_rubric" | "unknown_problem"}
///   GET  /v1/health                    Health
///   POST /v1/admin/reload-rubrics      {"rubric_count": n}
///
/// When an auth token is configured every route except health requires
/// `Authorization: Bearer <token>`; the reload route is refused without one.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<RewardService> service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; returns the bound port.
  int bind();
  /// Serves until stop(); call bind() first.
  void listen();
  void stop();
  bool running() const;

  /// Reloads the rubric store through options.reload.
  std::size_t reload_rubrics();

 private:
  void install_routes();
  void log_line(const Json& entry);

  std::shared_ptr<RewardService> service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex log_mutex_;
  int bound_port_ = -1;
};

/// Pure request handling shared by the HTTP layer and tests: returns the
/// status code and response body for a /v1/score body.
std::pair<int, std::string> handle_score_body(const RewardService& service, const std::string& body);

Json error_body(const std::string& reason, const std::string& message);

}  // namespace autorubric::service
