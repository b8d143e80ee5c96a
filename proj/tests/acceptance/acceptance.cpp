// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any criterion fails.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <thread>

#include "autorubric/core/jsonl.hpp"
#include "autorubric/forge/aggregation.hpp"
#include "autorubric/judge/mock_judge.hpp"
#include "autorubric/reward/reward_engine.hpp"
#include "autorubric/sandbox/experiment.hpp"
#include "autorubric/sandbox/policy.hpp"
#include "autorubric/service/http_server.hpp"
#include "support/fixtures.hpp"

using namespace autorubric;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and sizes, pinned.
constexpr double kAdvantageTol = 1e-9;
constexpr double kAffineTol = 1e-12;
constexpr double kGradientRelTol = 1e-4;
constexpr double kClipMargin = 1e-3;
constexpr double kAdvantageBudgetS = 1.0;
constexpr double kGradientBudgetS = 10.0;
constexpr int kAdvantageGroups = 1000;
constexpr int kMaxVerdicts = 12;
constexpr int kGradientConfigs = 100;
constexpr std::size_t kGatingProblems = 200;
constexpr int kSeeds = 5;
constexpr std::size_t kFuzzItems = 10000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome advantages_criterion() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_mean = 0, worst_std = 0, worst_shift = 0;
  const auto t0 = Clock::now();
  for (int g = 0; g < kAdvantageGroups; ++g) {
    const std::size_t n = 2 + rng() % 15;
    std::vector<double> r(n), s(n);
    const double a = 0.01 + 50 * u(rng), b = 10 * u(rng) - 5;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = u(rng);
      s[i] = a * r[i] + b;
    }
    const auto adv = reward::group_advantages(r, {}).advantages;
    const auto adv2 = reward::group_advantages(s, {}).advantages;
    double mean = 0;
    for (double x : adv) mean += x;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double x : adv) var += (x - mean) * (x - mean);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_std = std::max(worst_std, std::abs(std::sqrt(var / static_cast<double>(n)) - 1.0));
    for (std::size_t i = 0; i < n; ++i) worst_shift = std::max(worst_shift, std::abs(adv[i] - adv2[i]));
  }
  const double elapsed = seconds_since(t0);
  return {worst_mean < kAdvantageTol && worst_std < kAdvantageTol && worst_shift < kAdvantageTol &&
              elapsed < kAdvantageBudgetS,
          "max|mean|=" + fmt(worst_mean) + " max|std-1|=" + fmt(worst_std) + " max shift diff=" + fmt(worst_shift) +
              " time=" + fmt(elapsed) + "s"};
}

Outcome rubric_combine_criterion() {
  std::size_t checked = 0, mismatches = 0;
  for (int m = 1; m <= kMaxVerdicts; ++m) {
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      std::vector<bool> v(m);
      int count = 0;
      for (int i = 0; i < m; ++i) {
        v[i] = (mask >> i) & 1u;
        count += v[i];
      }
      ++checked;
      if (reward::rubric_reward(v) != static_cast<double>(count) / static_cast<double>(m)) ++mismatches;
    }
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    const double ans = rng() % 2, rub = u(rng), lambda = u(rng);
    reward::RewardConfig c0, c1, cl;
    c0.lambda = 0.0;
    c1.lambda = 1.0;
    cl.lambda = lambda;
    const double f0 = reward::combine(ans, rub, c0), f1 = reward::combine(ans, rub, c1);
    const double fl = reward::combine(ans, rub, cl);
    worst = std::max(worst, std::abs(fl - (f0 + lambda * (f1 - f0))));
    worst = std::max(worst, std::abs(fl - (lambda * ans + (1 - lambda) * rub)));
  }
  return {mismatches == 0 && worst <= kAffineTol, std::to_string(checked) + " verdict vectors, " +
                                                      std::to_string(mismatches) + " mismatches; max affine error " +
                                                      fmt(worst)};
}

Outcome gradient_criterion() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  int accepted = 0, rejected = 0;
  const auto t0 = Clock::now();
  while (accepted < kGradientConfigs) {
    const std::size_t k = 2 + rng() % 7;
    sandbox::TabularPolicy old_policy{std::vector<double>(k), 0.5 + u(rng)};
    for (auto& l : old_policy.logits) l = n01(rng);
    auto policy = old_policy;
    for (auto& l : policy.logits) l += 0.3 * n01(rng);

    sandbox::SurrogateInputs in;
    const std::size_t g = 2 + rng() % 15;
    in.group = sandbox::rollout_group(old_policy, g, rng);
    for (std::size_t i = 0; i < g; ++i) in.advantages.push_back(n01(rng));
    double total = 0;
    for (std::size_t i = 0; i < k; ++i) total += (in.ref_probs.emplace_back(0.05 + u(rng)));
    for (auto& q : in.ref_probs) q /= total;

    reward::SurrogateConfig cfg;
    cfg.clip_epsilon = 0.1 + 0.2 * u(rng);
    cfg.kl_beta = 0.1 * u(rng);
    cfg.kl_estimator = accepted % 2 ? reward::KlEstimator::kK3 : reward::KlEstimator::kExactCategorical;

    // Stay away from the clip boundary, where the objective is not differentiable.
    const auto logp = policy.log_probabilities();
    bool near_boundary = false;
    for (std::size_t i = 0; i < g; ++i) {
      const double rho = std::exp(logp[in.group.choices[i]] - in.group.old_logps[i]);
      if (std::abs(rho - (1 + cfg.clip_epsilon)) < kClipMargin || std::abs(rho - (1 - cfg.clip_epsilon)) < kClipMargin) {
        near_boundary = true;
      }
    }
    if (near_boundary) {
      ++rejected;
      continue;
    }

    const auto grad = sandbox::tabular_surrogate_gradient(policy, in, cfg);
    double max_err = 0, max_fd = 0;
    const double h = 1e-6;
    for (std::size_t j = 0; j < k; ++j) {
      auto plus = policy, minus = policy;
      plus.logits[j] += h;
      minus.logits[j] -= h;
      const double fd = (sandbox::tabular_surrogate(plus, in, cfg) - sandbox::tabular_surrogate(minus, in, cfg)) / (2 * h);
      max_err = std::max(max_err, std::abs(grad[j] - fd));
      max_fd = std::max(max_fd, std::abs(fd));
    }
    worst = std::max(worst, max_err / std::max(max_fd, 1e-8));
    ++accepted;
  }
  const double elapsed = seconds_since(t0);
  return {worst < kGradientRelTol && elapsed < kGradientBudgetS,
          std::to_string(accepted) + " configurations (" + std::to_string(rejected) +
              " near the clip boundary skipped); max relative error " + fmt(worst) + "; time=" + fmt(elapsed) + "s"};
}

Outcome gating_criterion() {
  const auto gating = fixtures::make_gating_corpus(kGatingProblems, 4242);
  fixtures::TempDir dir("accept-gating");
  judge::MockJudge judge(judge::MockRules{});
  forge::AggregationConfig cfg;
  cfg.created_at = "2026-01-01T00:00:00Z";
  const auto report =
      forge::run_aggregation(gating.corpus, forge::group_rollouts(gating.rollouts), cfg, {}, judge, dir.path());
  std::size_t wrong_membership = 0;
  for (const auto& p : gating.planted) {
    const bool should = p.correct >= cfg.min_correct;
    if (report.store.contains(p.problem_id) != should) ++wrong_membership;
  }
  const auto expected = fixtures::expected_stats(gating, cfg.min_correct);
  const auto recomputed = forge::compute_stats(forge::RubricStore::load(dir.path()), gating.corpus.size());
  const bool stats_exact = report.stats == expected && recomputed == expected;
  return {wrong_membership == 0 && stats_exact && report.failures.empty(),
          std::to_string(report.store.size()) + "/" + std::to_string(kGatingProblems) + " sets, coverage " +
              fmt(report.stats.coverage) + ", avg criteria " + fmt(report.stats.avg_criteria) +
              ", membership errors " + std::to_string(wrong_membership) + ", stats exact: " +
              (stats_exact ? "yes" : "no")};
}

struct SandboxPair {
  sandbox::RunSummary mixed;  // lambda 0.5
  sandbox::RunSummary answer_only;
};

std::vector<SandboxPair> run_sandbox_pairs() {
  sandbox::ExperimentConfig cfg;
  std::vector<SandboxPair> out;
  for (int s = 1; s <= kSeeds; ++s) {
    out.push_back({sandbox::run_sandbox(0.5, static_cast<std::uint64_t>(s), cfg),
                   sandbox::run_sandbox(1.0, static_cast<std::uint64_t>(s), cfg)});
  }
  return out;
}

Outcome central_claim_criterion(const std::vector<SandboxPair>& pairs) {
  int mass_wins = 0, rate_wins = 0;
  std::string detail;
  for (const auto& p : pairs) {
    mass_wins += p.mixed.final_faithful_mass > p.answer_only.final_faithful_mass;
    rate_wins += p.mixed.faithfulness.rate < p.answer_only.faithfulness.rate;
    detail += " seed " + std::to_string(p.mixed.seed) + ": mass " + fmt(p.mixed.final_faithful_mass) + " vs " +
              fmt(p.answer_only.final_faithful_mass) + ", rate " + fmt(p.mixed.faithfulness.rate) + " vs " +
              fmt(p.answer_only.faithfulness.rate) + ";";
  }
  const int n = static_cast<int>(pairs.size());
  return {n >= kSeeds && mass_wins == n && rate_wins == n,
          "lambda=0.5 vs 1.0, faithful mass wins " + std::to_string(mass_wins) + "/" + std::to_string(n) +
              ", lower inconsistency " + std::to_string(rate_wins) + "/" + std::to_string(n) + ";" + detail};
}

Outcome stability_criterion(const std::vector<SandboxPair>& pairs) {
  int wins = 0;
  std::string detail;
  for (const auto& p : pairs) {
    wins += p.mixed.answer_tail_variance <= p.answer_only.answer_tail_variance;
    detail += " " + fmt(p.mixed.answer_tail_variance) + " vs " + fmt(p.answer_only.answer_tail_variance) + ";";
  }
  const int n = static_cast<int>(pairs.size());
  return {2 * wins > n, "lambda=0.5 tail variance <= lambda=1.0 on " + std::to_string(wins) + "/" + std::to_string(n) +
                            " seeds;" + detail};
}

// Corpus with rubric sets taken straight from the planted steps.
struct ServiceFixture {
  fixtures::GatingCorpus gating;
  forge::RubricStore store;
};

ServiceFixture service_fixture(std::size_t n, std::uint64_t seed) {
  ServiceFixture f{fixtures::make_gating_corpus(n, seed), {}};
  for (const auto& p : f.gating.planted) {
    if (p.correct < 4) continue;
    RubricSet set{p.problem_id, {}, {"planted"}, "2026-01-01T00:00:00Z"};
    for (std::size_t i = 0; i < p.steps.size(); ++i) set.criteria.push_back({static_cast<int>(i) + 1, p.steps[i]});
    f.store.put(set);
  }
  return f;
}

std::optional<std::string> post(int port, const std::string& body, int* status) {
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(std::chrono::seconds(300));
  auto res = client.Post("/v1/score", body, "application/json");
  if (!res) return std::nullopt;
  *status = res->status;
  return res->body;
}

template <typename F>
auto with_server(std::shared_ptr<service::RewardService> svc, F&& body) {
  service::ServerOptions options;
  options.port = 0;
  service::HttpServer server(std::move(svc), options);
  const int port = server.bind();
  std::thread thread([&] { server.listen(); });
  for (int i = 0; i < 400 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  auto result = body(port);
  server.stop();
  thread.join();
  return result;
}

Outcome service_criterion() {
  const auto f = service_fixture(300, 77);
  auto svc = std::make_shared<service::RewardService>(
      f.gating.corpus, f.store, std::make_shared<judge::MockJudge>(fixtures::service_mock_rules()),
      service::ServiceSettings{});
  const auto request = fixtures::random_batch(f.gating.corpus, f.store.sets(), kFuzzItems, 31337, 0.02);
  const auto body = dump_line(service::to_json(request));

  int s1 = 0, s2 = 0;
  const auto [first, second] = with_server(svc, [&](int port) {
    return std::pair{post(port, body, &s1), post(port, body, &s2)};
  });
  if (!first || !second || s1 != 200 || s2 != 200) return {false, "HTTP request failed"};
  const bool idempotent = *first == *second;
  const auto resp = service::score_response_from_json(Json::parse(*first));

  // Conservation: every item appears exactly once, records and failures in input order.
  std::size_t r = 0, fl = 0, misplaced = 0;
  std::unordered_map<std::string, std::string> problem_of;
  for (const auto& item : request.items) {
    const auto& id = *item.trajectory_id;
    problem_of[id] = item.problem_id;
    if (r < resp.records.size() && resp.records[r].trajectory_id == id) {
      ++r;
    } else if (fl < resp.judge_failures.size() && resp.judge_failures[fl].trajectory_id == id) {
      ++fl;
    } else {
      ++misplaced;
    }
  }
  const bool conserved =
      misplaced == 0 && r == resp.records.size() && fl == resp.judge_failures.size() && r + fl == kFuzzItems;

  // Isolation: each record equals the record of the same item scored alone.
  std::size_t isolation_errors = 0;
  std::size_t k = 0;
  for (const auto& item : request.items) {
    service::ScoreBatchRequest single;
    single.items.push_back(item);
    try {
      const auto alone = svc->score(single);
      if (alone.records.size() == 1) {
        if (k >= resp.records.size() || !(alone.records[0] == resp.records[k])) ++isolation_errors;
        ++k;
      } else if (alone.judge_failures.size() != 1) {
        ++isolation_errors;
      }
    } catch (const service::ServiceError& e) {
      // A lone unavailable item is a whole-batch 503; in the batch it must be a failure.
      if (e.status() != 503) ++isolation_errors;
    }
  }

  // Advantages: recompute from the returned records with the reward engine.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const RewardRecord*>> by_problem;
  for (const auto& rec : resp.records) {
    const auto& pid = problem_of.at(rec.trajectory_id);
    if (!by_problem.count(pid)) order.push_back(pid);
    by_problem[pid].push_back(&rec);
  }
  std::size_t adv_errors = 0, groups = 0;
  for (const auto& pid : order) {
    const auto& members = by_problem[pid];
    if (members.size() < 2) continue;
    if (groups >= resp.advantage_groups.size()) {
      ++adv_errors;
      break;
    }
    const auto& got = resp.advantage_groups[groups++];
    std::vector<double> rewards;
    for (const auto* m : members) rewards.push_back(m->combined_reward);
    const auto expect = reward::group_advantages(rewards, {}, pid);
    if (got.problem_id != pid || got.rewards != expect.rewards || got.advantages != expect.advantages ||
        got.degenerate != expect.degenerate) {
      ++adv_errors;
    }
  }
  if (groups != resp.advantage_groups.size()) ++adv_errors;

  return {conserved && isolation_errors == 0 && idempotent && adv_errors == 0,
          std::to_string(kFuzzItems) + " items: " + std::to_string(resp.records.size()) + " records, " +
              std::to_string(resp.judge_failures.size()) + " failures; conservation " + (conserved ? "ok" : "BROKEN") +
              ", isolation errors " + std::to_string(isolation_errors) + ", idempotent " +
              (idempotent ? "yes" : "no") + ", advantage mismatches " + std::to_string(adv_errors) + " over " +
              std::to_string(groups) + " groups"};
}

struct PipelineBytes {
  std::string records;
  std::string index;
  std::string response;
};

PipelineBytes run_pipeline() {
  const auto gating = fixtures::make_gating_corpus(60, 8);
  fixtures::TempDir dir("accept-e2e");
  save_corpus(dir / "corpus.jsonl", gating.corpus);
  save_trajectories(dir / "rollouts.jsonl", gating.rollouts);

  judge::MockJudge composer(judge::MockRules{});
  forge::AggregationConfig cfg;
  cfg.created_at = "2026-01-01T00:00:00Z";
  cfg.concurrency = 4;
  forge::run_aggregation(load_corpus(dir / "corpus.jsonl"),
                         forge::group_rollouts(load_trajectories(dir / "rollouts.jsonl")), cfg, {}, composer,
                         dir / "rubrics");

  auto svc = std::make_shared<service::RewardService>(
      load_corpus(dir / "corpus.jsonl"), forge::RubricStore::load(dir / "rubrics"),
      std::make_shared<judge::MockJudge>(fixtures::service_mock_rules()), service::ServiceSettings{});
  service::ScoreBatchRequest req;
  req.group_by_problem = true;
  for (const auto& t : gating.rollouts) req.items.push_back({t.problem_id, t.raw_text, t.trajectory_id});
  int status = 0;
  const auto response =
      with_server(svc, [&](int port) { return post(port, dump_line(service::to_json(req)), &status); });
  return {read_file(dir / "rubrics" / "rubrics.jsonl"), read_file(dir / "rubrics" / "index.json"),
          status == 200 && response ? *response : std::string()};
}

Outcome determinism_criterion() {
  const auto a = run_pipeline();
  const auto b = run_pipeline();
  const bool ok = !a.response.empty() && a.records == b.records && a.index == b.index && a.response == b.response;
  return {ok, "rubric store " + std::to_string(a.records.size()) + " bytes, response " +
                  std::to_string(a.response.size()) + " bytes; identical: " + (ok ? "yes" : "no")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  " << o.detail << std::endl;
  };

  report("advantage normalization", advantages_criterion);
  report("rubric reward and combination", rubric_combine_criterion);
  report("surrogate gradient", gradient_criterion);
  report("aggregation gating", gating_criterion);
  std::vector<SandboxPair> pairs;
  try {
    pairs = run_sandbox_pairs();
  } catch (const std::exception& e) {
    std::cout << "sandbox runs failed: " << e.what() << std::endl;
  }
  report("faithfulness ordering", [&] { return central_claim_criterion(pairs); });
  report("training stability", [&] { return stability_criterion(pairs); });
  report("service contract", service_criterion);
  report("end-to-end determinism", determinism_criterion);
  return failures == 0 ? 0 : 1;
}
