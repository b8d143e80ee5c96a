#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "autorubric/judge/judge.hpp"

namespace autorubric::judge {

/// Deterministic rule table for the mock judge. Replies are produced in the
/// same text grammar a remote judge uses and go through the same parsers.
struct MockRules {
  enum class VerdictMode {
    kTable,      // (problem_id, criterion index) -> verdict, default_verdict otherwise
    kAllTrue,
    kAllFalse,
    kStepMatch,  // criterion satisfied iff its text contains one of the trajectory's steps
  };

  VerdictMode verdict_mode = VerdictMode::kTable;
  bool default_verdict = false;
  std::map<std::string, std::map<int, bool>> verdict_table;
  // Emit this many verdict lines instead of one per criterion.
  std::map<std::string, int> verdict_count_override;

  std::map<std::string, double> holistic_scores;
  std::optional<double> default_holistic;  // unset: unlisted problems are unparseable

  // Criteria to emit when asked to compose rubrics. Problems not listed get
  // the steps shared by at least half of the supplied trajectories.
  std::map<std::string, std::vector<std::string>> rubrics;

  std::set<std::string> inconsistent_trajectory_ids;
  std::set<std::string> inconsistent_texts;

  // Trajectories whose raw text contains these markers fail the call.
  std::string unavailable_marker;
  std::string garbled_marker;

  bool reachable = true;
};

MockRules::VerdictMode parse_verdict_mode(std::string_view text);
MockRules mock_rules_from_json(const Json& j);

/// In-process judge with zero network use; identical inputs always produce
/// identical outputs.
class MockJudge final : public Judge {
 public:
  explicit MockJudge(MockRules rules);

  JudgeVerdicts score_against_rubrics(const Trajectory& trajectory, const RubricSet& rubrics) override;
  double holistic_score(const Trajectory& trajectory) override;
  std::string compose_rubrics(const ProblemInstance& problem, std::span<const Trajectory> correct,
                              int max_criteria) override;
  bool flags_inconsistent(const Trajectory& trajectory) override;
  bool probe() override { return rules_.reachable; }

  std::size_t call_count() const { return calls_.load(); }
  std::size_t compose_count() const { return compose_calls_.load(); }
  const MockRules& rules() const { return rules_; }

 private:
  void check_failure_markers(const Trajectory& trajectory) const;

  MockRules rules_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> compose_calls_{0};
};

/// Steps (trimmed, at least 3 words) that occur in at least half of the
/// trajectories, ordered by first appearance.
std::vector<std::string> shared_steps(std::span<const Trajectory> trajectories);

/// Builds a judge from a JSON config: {"kind": "mock", ...MockRules} or
/// {"kind": "openai", base_url, api_key_env, model_name, timeout_ms,
/// max_retries, max_concurrency, retry_backoff_ms, templates_dir, cache_dir}.
std::shared_ptr<Judge> make_judge(const Json& config);
std::shared_ptr<Judge> make_judge_from_file(const std::filesystem::path& path);

JudgeEndpointConfig endpoint_config_from_json(const Json& j);

}  // namespace autorubric::judge
