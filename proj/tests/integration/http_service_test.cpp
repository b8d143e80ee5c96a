#include <doctest.h>
#include <httplib.h>

#include <sstream>
#include <thread>

#include "autorubric/judge/mock_judge.hpp"
#include "autorubric/service/http_server.hpp"
#include "support/fixtures.hpp"

using namespace autorubric;
using namespace autorubric::service;

namespace {

const std::vector<ProblemInstance> kCorpus = {{"p1", "Compute the volume.", "", "24", AnswerKind::kFreeForm},
                                              {"p2", "No rubric yet.", "", "7", AnswerKind::kFreeForm}};

forge::RubricStore store_with(const std::vector<std::string>& ids) {
  forge::RubricStore store;
  for (const auto& id : ids) store.put({id, {{1, "Compute the base area."}, {2, "Multiply by the height."}}, {"s"}, "t"});
  return store;
}

// A server on a free port, serving on a background thread for the test's lifetime.
struct RunningServer {
  std::shared_ptr<RewardService> service;
  std::ostringstream log;
  std::unique_ptr<HttpServer> server;
  std::thread thread;
  int port = -1;

  explicit RunningServer(std::optional<std::string> token, judge::MockRules rules = fixtures::service_mock_rules()) {
    service = std::make_shared<RewardService>(kCorpus, store_with({"p1"}), std::make_shared<judge::MockJudge>(rules),
                                              ServiceSettings{});
    ServerOptions options;
    options.port = 0;
    options.auth_token = std::move(token);
    options.reload = [] { return store_with({"p1", "p2"}); };
    options.log = &log;
    server = std::make_unique<HttpServer>(service, options);
    port = server->bind();
    REQUIRE(port > 0);
    thread = std::thread([this] { server->listen(); });
    for (int i = 0; i < 200 && !server->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~RunningServer() { shutdown(); }

  // Stops serving and waits until every in-flight request has been logged.
  void shutdown() {
    server->stop();
    if (thread.joinable()) thread.join();
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

const std::string kBody =
    R"({"items":[{"problem_id":"p1","raw_text":"Compute the base area.\nFinal answer: 24","trajectory_id":"a"}]})";

}  // namespace

TEST_CASE("score, rubric lookup and health over HTTP") {
  RunningServer s(std::nullopt);
  auto c = s.client();
  auto res = c.Post("/v1/score", kBody, "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto body = Json::parse(res->body);
  CHECK(body.at("records")[0].at("combined_reward") == 0.75);

  res = c.Get("/v1/rubrics/p1");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).at("criteria").size() == 2);

  res = c.Get("/v1/rubrics/p2");
  CHECK(res->status == 404);
  CHECK(Json::parse(res->body).at("error") == "no_rubric");
  res = c.Get("/v1/rubrics/zzz");
  CHECK(res->status == 404);
  CHECK(Json::parse(res->body).at("error") == "unknown_problem");

  res = c.Get("/v1/health");
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).at("status") == "ok");
  CHECK(Json::parse(res->body).at("rubric_count") == 1);

  res = c.Post("/v1/score", "{", "application/json");
  CHECK(res->status == 400);
  res = c.Post("/v1/score", R"({"items":[{"problem_id":"nope","raw_text":"x"}]})", "application/json");
  CHECK(res->status == 404);
  res = c.Post("/v1/score", R"({"items":[{"problem_id":"p1","raw_text":"[[judge-down]]"}]})", "application/json");
  CHECK(res->status == 503);
}

TEST_CASE("reload is refused without a configured token") {
  RunningServer s(std::nullopt);
  auto c = s.client();
  auto res = c.Post("/v1/admin/reload-rubrics", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 403);
}

TEST_CASE("bearer token guards every route except health") {
  RunningServer s(std::string("sekret"));
  auto c = s.client();
  CHECK(c.Post("/v1/score", kBody, "application/json")->status == 401);
  CHECK(c.Get("/v1/rubrics/p1")->status == 401);
  CHECK(c.Post("/v1/admin/reload-rubrics", "", "application/json")->status == 401);
  CHECK(c.Get("/v1/health")->status == 200);

  c.set_bearer_token_auth("sekret");
  CHECK(c.Post("/v1/score", kBody, "application/json")->status == 200);
  CHECK(c.Get("/v1/rubrics/p2")->status == 404);
  auto res = c.Post("/v1/admin/reload-rubrics", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).at("rubric_count") == 2);
  CHECK(c.Get("/v1/rubrics/p2")->status == 200);
}

TEST_CASE("health degrades when the judge is unreachable") {
  auto rules = fixtures::service_mock_rules();
  rules.reachable = false;
  RunningServer s(std::nullopt, rules);
  auto res = s.client().Get("/v1/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).at("status") == "degraded");
}

TEST_CASE("one structured log line per request") {
  RunningServer s(std::nullopt);
  {
    auto c = s.client();
    c.Post("/v1/score", kBody, "application/json");
    c.Get("/v1/health");
  }
  s.shutdown();
  std::istringstream lines(s.log.str());
  std::vector<Json> entries;
  for (std::string line; std::getline(lines, line);) entries.push_back(Json::parse(line));
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].at("method") == "POST");
  CHECK(entries[0].at("path") == "/v1/score");
  CHECK(entries[0].at("status") == 200);
  CHECK(entries[0].at("request_bytes") == kBody.size());
  CHECK(entries[0].at("duration_ms").get<double>() >= 0.0);
  CHECK(entries[1].at("path") == "/v1/health");
}

TEST_CASE("concurrent clients get independent, deterministic answers") {
  RunningServer s(std::nullopt);
  const auto expected = s.client().Post("/v1/score", kBody, "application/json")->body;
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      auto c = s.client();
      for (int i = 0; i < 10; ++i) {
        auto res = c.Post("/v1/score", kBody, "application/json");
        if (!res || res->body != expected) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(mismatches == 0);
}
