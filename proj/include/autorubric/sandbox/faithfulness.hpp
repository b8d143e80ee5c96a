#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autorubric/judge/mock_judge.hpp"
#include "autorubric/sandbox/policy.hpp"
#include "autorubric/sandbox/tasks.hpp"

namespace autorubric::sandbox {

struct FaithfulnessFailure {
  std::string trajectory_id;
  std::string reason;
};

struct FaithfulnessReport {
  double rate = 0.0;  // flagged / evaluated; 0 when nothing was evaluated
  std::size_t flagged = 0;
  std::size_t evaluated = 0;
  std::vector<FaithfulnessFailure> failures;
};

Json to_json(const FaithfulnessReport& report);

/// Asks the judge whether each trajectory's final answer contradicts its own
/// derivation. Per-item judge errors are counted as failures and excluded
/// from the rate.
FaithfulnessReport faithfulness_eval(std::span<const Trajectory> corpus, judge::Judge& judge);

/// Draws `per_task` samples from each task's policy and returns them as
/// trajectories, with ids "<task_id>/s<index>".
std::vector<Trajectory> sample_policy_corpus(const std::vector<SyntheticTask>& tasks,
                                             const std::vector<TabularPolicy>& policies, std::size_t per_task,
                                             std::uint64_t seed);

/// Mock rules whose judge flags exactly the shortcut templates as
/// inconsistent and returns ground-truth rubric verdicts.
judge::MockRules planted_label_rules(const std::vector<SyntheticTask>& tasks);

}  // namespace autorubric::sandbox
