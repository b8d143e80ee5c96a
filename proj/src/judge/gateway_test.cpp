#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "autorubric/judge/gateway.hpp"
#include "autorubric/judge/mock_judge.hpp"
#include "support/fixtures.hpp"

using namespace autorubric;
using namespace autorubric::judge;

namespace {

std::string chat_reply(const std::string& content) {
  Json j;
  j["choices"] = Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

// Records every body, tracks peak concurrency, and fails the first
// `transport_failures` calls and returns `garbled` replies for the next
// `garbled_replies` calls.
class FakeTransport : public ChatTransport {
 public:
  std::string reply = "1: YES\n2: NO";
  int transport_failures = 0;
  int garbled_replies = 0;
  std::chrono::milliseconds delay{0};
  bool reachable = true;

  std::string post(const std::string& body) override {
    const int now = ++in_flight_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    if (delay.count()) std::this_thread::sleep_for(delay);
    std::string out;
    bool fail = false;
    {
      std::lock_guard lock(mutex_);
      bodies_.push_back(body);
      if (transport_failures > 0) {
        --transport_failures;
        fail = true;
      } else if (garbled_replies > 0) {
        --garbled_replies;
        out = chat_reply("I could not decide.");
      } else {
        out = chat_reply(reply);
      }
    }
    --in_flight_;
    if (fail) throw TransportError("connection refused");
    return out;
  }
  bool probe() override { return reachable; }

  int peak() const { return peak_.load(); }
  std::vector<std::string> bodies() {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

 private:
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  std::mutex mutex_;
  std::vector<std::string> bodies_;
};

JudgeEndpointConfig fast_config() {
  JudgeEndpointConfig cfg;
  cfg.model_name = "judge-test";
  cfg.retry_backoff = std::chrono::milliseconds(1);
  cfg.max_retries = 3;
  return cfg;
}

const RubricSet kRubrics{"p1", {{1, "Computes the base area."}, {2, "Multiplies by the height."}}, {"a"}, "t"};

}  // namespace

TEST_CASE("request body is an OpenAI-compatible chat completion") {
  auto transport = std::make_shared<FakeTransport>();
  GatewayJudge judge(fast_config(), transport);
  judge.score_against_rubrics(make_trajectory("t", "p1", "Area is 6."), kRubrics);
  const auto body = Json::parse(transport->bodies().at(0));
  CHECK(body.at("model") == "judge-test");
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("messages").size() == 1);
  CHECK(body.at("messages")[0].at("role") == "user");
  const auto content = body.at("messages")[0].at("content").get<std::string>();
  CHECK(content.find("Area is 6.") != std::string::npos);
  CHECK(content.find("2. Multiplies by the height.") != std::string::npos);
}

TEST_CASE("verdicts are parsed in criterion order") {
  auto transport = std::make_shared<FakeTransport>();
  GatewayJudge judge(fast_config(), transport);
  const auto v = judge.score_against_rubrics(make_trajectory("t", "p1", "x"), kRubrics);
  CHECK(v.verdicts == std::vector<bool>{true, false});
  CHECK(v.raw_response == transport->reply);
}

TEST_CASE("retries reuse a byte-identical body") {
  auto transport = std::make_shared<FakeTransport>();
  transport->transport_failures = 2;
  transport->garbled_replies = 1;
  GatewayJudge judge(fast_config(), transport);
  judge.score_against_rubrics(make_trajectory("t", "p1", "x"), kRubrics);
  const auto bodies = transport->bodies();
  REQUIRE(bodies.size() == 4);
  CHECK(std::all_of(bodies.begin(), bodies.end(), [&](const std::string& b) { return b == bodies[0]; }));
}

TEST_CASE("exhausted transport retries raise JudgeUnavailable") {
  auto transport = std::make_shared<FakeTransport>();
  transport->transport_failures = 100;
  GatewayJudge judge(fast_config(), transport);
  CHECK_THROWS_AS(judge.score_against_rubrics(make_trajectory("t", "p1", "x"), kRubrics), JudgeUnavailable);
  CHECK(transport->bodies().size() == 4);
}

TEST_CASE("a reply with too few verdicts is unparseable after retries") {
  auto transport = std::make_shared<FakeTransport>();
  transport->reply = "1: YES";
  GatewayJudge judge(fast_config(), transport);
  CHECK_THROWS_AS(judge.score_against_rubrics(make_trajectory("t", "p1", "x"), kRubrics), UnparseableVerdict);
}

TEST_CASE("holistic scores go through the fraction grammar") {
  auto transport = std::make_shared<FakeTransport>();
  transport->reply = "Clear and correct. Score: 8/10";
  GatewayJudge judge(fast_config(), transport);
  CHECK(judge.holistic_score(make_trajectory("t", "p1", "x")) == doctest::Approx(0.8));
  transport->reply = "Nice work overall.";
  CHECK_THROWS_AS(judge.holistic_score(make_trajectory("t", "p1", "x")), UnparseableVerdict);
}

TEST_CASE("in-flight calls never exceed max_concurrency") {
  auto transport = std::make_shared<FakeTransport>();
  transport->delay = std::chrono::milliseconds(5);
  auto cfg = fast_config();
  cfg.max_concurrency = 3;
  GatewayJudge judge(cfg, transport);
  std::vector<std::thread> threads;
  for (int t = 0; t < 16; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 4; ++i) {
        judge.score_against_rubrics(make_trajectory("t" + std::to_string(t), "p1", "x" + std::to_string(i)), kRubrics);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(transport->bodies().size() == 64);
  CHECK(transport->peak() <= 3);
  CHECK(transport->peak() >= 2);
}

TEST_CASE("content-addressed cache answers repeated requests") {
  fixtures::TempDir dir("cache");
  auto transport = std::make_shared<FakeTransport>();
  auto cfg = fast_config();
  cfg.cache_dir = dir.path();
  GatewayJudge judge(cfg, transport);
  const auto t = make_trajectory("t", "p1", "x");
  const auto first = judge.score_against_rubrics(t, kRubrics);
  const auto second = judge.score_against_rubrics(t, kRubrics);
  CHECK(first.verdicts == second.verdicts);
  CHECK(transport->bodies().size() == 1);
  CHECK(std::filesystem::exists(dir / sha256_hex(transport->bodies()[0])));
}

TEST_CASE("sha256 matches a known digest") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("probe never throws") {
  class Throwing : public FakeTransport {
   public:
    bool probe() override { throw TransportError("down"); }
  };
  GatewayJudge judge(fast_config(), std::make_shared<Throwing>());
  CHECK_FALSE(judge.probe());
}

TEST_CASE("gateway and mock judge agree on the same reply text") {
  MockRules rules;
  rules.verdict_table["p1"] = {{1, true}, {2, false}};
  MockJudge mock(rules);
  const auto t = make_trajectory("t", "p1", "x");
  const auto from_mock = mock.score_against_rubrics(t, kRubrics);
  auto transport = std::make_shared<FakeTransport>();
  transport->reply = from_mock.raw_response;
  GatewayJudge judge(fast_config(), transport);
  CHECK(judge.score_against_rubrics(t, kRubrics).verdicts == from_mock.verdicts);
}

TEST_CASE("endpoint config validation") {
  auto cfg = fast_config();
  cfg.max_concurrency = 0;
  CHECK_THROWS_AS(validate(cfg), InvariantViolation);
  cfg = fast_config();
  cfg.timeout = std::chrono::milliseconds(0);
  CHECK_THROWS_AS(validate(cfg), InvariantViolation);
}
