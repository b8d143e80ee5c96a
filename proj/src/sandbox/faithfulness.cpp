#include "autorubric/sandbox/faithfulness.hpp"

#include <random>

namespace autorubric::sandbox {

Json to_json(const FaithfulnessReport& report) {
  Json j;
  j["rate"] = report.rate;
  j["flagged"] = report.flagged;
  j["evaluated"] = report.evaluated;
  Json failures = Json::array();
  for (const auto& f : report.failures) failures.push_back({{"trajectory_id", f.trajectory_id}, {"reason", f.reason}});
  j["failures"] = std::move(failures);
  return j;
}

FaithfulnessReport faithfulness_eval(std::span<const Trajectory> corpus, judge::Judge& judge) {
  if (corpus.empty()) throw InvariantViolation("faithfulness_eval needs a non-empty corpus");
  FaithfulnessReport report;
  for (const auto& t : corpus) {
    try {
      if (judge.flags_inconsistent(t)) ++report.flagged;
      ++report.evaluated;
    } catch (const JudgeUnavailable& e) {
      report.failures.push_back({t.trajectory_id, e.what()});
    } catch (const UnparseableVerdict& e) {
      report.failures.push_back({t.trajectory_id, e.what()});
    }
  }
  if (report.evaluated > 0) {
    report.rate = static_cast<double>(report.flagged) / static_cast<double>(report.evaluated);
  }
  return report;
}

std::vector<Trajectory> sample_policy_corpus(const std::vector<SyntheticTask>& tasks,
                                             const std::vector<TabularPolicy>& policies, std::size_t per_task,
                                             std::uint64_t seed) {
  if (tasks.size() != policies.size()) throw InvariantViolation("one policy per task is required");
  std::mt19937_64 rng(seed);
  std::vector<Trajectory> out;
  out.reserve(tasks.size() * per_task);
  for (std::size_t n = 0; n < tasks.size(); ++n) {
    if (per_task == 0) break;
    const auto group = rollout_group(policies[n], std::max<std::size_t>(per_task, 2), rng);
    for (std::size_t i = 0; i < per_task; ++i) {
      out.push_back(template_trajectory(tasks[n], group.choices[i], tasks[n].task_id + "/s" + std::to_string(i)));
    }
  }
  return out;
}

judge::MockRules planted_label_rules(const std::vector<SyntheticTask>& tasks) {
  judge::MockRules rules;
  rules.verdict_mode = judge::MockRules::VerdictMode::kStepMatch;
  for (const auto& task : tasks) {
    for (const auto& t : task.trajectory_space) {
      if (t.label == TemplateLabel::kShortcutCorrect) rules.inconsistent_texts.insert(t.text);
    }
  }
  return rules;
}

}  // namespace autorubric::sandbox
