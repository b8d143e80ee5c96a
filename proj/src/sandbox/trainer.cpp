#include "autorubric/sandbox/trainer.hpp"

#include <cmath>
#include <optional>
#include <random>

namespace autorubric::sandbox {
namespace {

template <typename F>
std::vector<double> column(const std::vector<TraceRecord>& records, F field) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(field(r));
  return out;
}

// Rewards for every template of one task, computed once: the verifier and the
// judge are deterministic, so re-scoring a template would return the same values.
struct TemplateRewards {
  std::vector<double> answer;
  std::vector<std::optional<std::vector<bool>>> verdicts;
};

TemplateRewards score_templates(const SyntheticTask& task, judge::Judge& judge, const TrainConfig& cfg) {
  const auto problem = task_problem(task);
  const auto rubrics = task_rubrics(task);
  const bool use_rubric = cfg.reward.lambda < 1.0;
  TemplateRewards out;
  for (std::size_t k = 0; k < task.trajectory_space.size(); ++k) {
    const auto traj = template_trajectory(task, k, task.task_id + "/t" + std::to_string(k));
    const auto answer = verifier::extract_final_answer(traj, problem.answer_kind, cfg.verifier);
    out.answer.push_back(verifier::verify(answer, problem.gold_answer, problem.answer_kind, cfg.verifier));
    if (use_rubric) {
      out.verdicts.emplace_back(judge.score_against_rubrics(traj, rubrics).verdicts);
    } else {
      out.verdicts.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  reward::validate(cfg.reward);
  reward::validate(cfg.surrogate);
  verifier::validate(cfg.verifier);
  if (cfg.steps < 1) throw InvariantViolation("steps must be >= 1");
  if (cfg.group_size < 2) throw GroupTooSmall("group_size must be >= 2");
  if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate < 0.0) {
    throw InvariantViolation("learning_rate must be finite and non-negative");
  }
  if (!(cfg.temperature > 0.0)) throw InvariantViolation("temperature must be positive");
}

std::vector<double> TrainingTrace::answer_reward() const {
  return column(records, [](const TraceRecord& r) { return r.answer_reward_mean; });
}
std::vector<double> TrainingTrace::rubric_reward() const {
  return column(records, [](const TraceRecord& r) { return r.rubric_reward_mean; });
}
std::vector<double> TrainingTrace::mean_length() const {
  return column(records, [](const TraceRecord& r) { return r.mean_length; });
}
std::vector<double> TrainingTrace::faithful_mass() const {
  return column(records, [](const TraceRecord& r) { return r.faithful_mass; });
}

std::vector<TabularPolicy> initial_policies(const std::vector<SyntheticTask>& tasks, double temperature) {
  std::vector<TabularPolicy> out;
  for (const auto& task : tasks) {
    TabularPolicy p;
    p.temperature = temperature;
    for (const auto& t : task.trajectory_space) p.logits.push_back(t.initial_logit);
    out.push_back(std::move(p));
  }
  return out;
}

TraceRecord evaluate_policies(const std::vector<SyntheticTask>& tasks, const std::vector<TabularPolicy>& policies) {
  if (tasks.size() != policies.size()) throw InvariantViolation("one policy per task is required");
  TraceRecord rec;
  if (tasks.empty()) return rec;
  for (std::size_t n = 0; n < tasks.size(); ++n) {
    const auto probs = policies[n].probabilities();
    const auto& space = tasks[n].trajectory_space;
    for (std::size_t k = 0; k < space.size(); ++k) {
      const auto& t = space[k];
      const bool correct = t.label != TemplateLabel::kIncorrect;
      rec.answer_reward_mean += probs[k] * (correct ? 1.0 : 0.0);
      rec.rubric_reward_mean += probs[k] * reward::rubric_reward(t.verdicts);
      rec.mean_length += probs[k] * static_cast<double>(template_length(t));
      if (t.label == TemplateLabel::kFaithfulCorrect) rec.faithful_mass += probs[k];
    }
  }
  const auto n = static_cast<double>(tasks.size());
  rec.answer_reward_mean /= n;
  rec.rubric_reward_mean /= n;
  rec.mean_length /= n;
  rec.faithful_mass /= n;
  return rec;
}

TrainResult train(const std::vector<SyntheticTask>& tasks, judge::Judge& judge, const TrainConfig& cfg) {
  validate(cfg);
  if (tasks.empty()) throw InvariantViolation("train needs at least one task");
  for (const auto& t : tasks) validate(t);

  std::vector<TemplateRewards> scored;
  for (const auto& task : tasks) scored.push_back(score_templates(task, judge, cfg));

  TrainResult result;
  result.initial = initial_policies(tasks, cfg.temperature);
  auto policies = result.initial;
  std::vector<std::vector<double>> ref_probs;
  for (const auto& p : result.initial) ref_probs.push_back(p.probabilities());

  std::mt19937_64 rng(cfg.seed);
  result.trace.records.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    double sampled_sum = 0.0;
    for (std::size_t n = 0; n < tasks.size(); ++n) {
      auto& policy = policies[n];
      SurrogateInputs in;
      in.group = rollout_group(policy, cfg.group_size, rng);
      in.ref_probs = ref_probs[n];

      std::vector<double> combined;
      combined.reserve(cfg.group_size);
      for (std::size_t i = 0; i < cfg.group_size; ++i) {
        const auto k = in.group.choices[i];
        const auto rec = reward::make_reward_record(tasks[n].task_id + "/t" + std::to_string(k),
                                                    scored[n].answer[k], scored[n].verdicts[k], cfg.reward);
        combined.push_back(rec.combined_reward);
        sampled_sum += rec.combined_reward;
      }
      in.advantages = reward::group_advantages(combined, cfg.reward, tasks[n].task_id).advantages;

      const auto grad = tabular_surrogate_gradient(policy, in, cfg.surrogate);
      for (std::size_t k = 0; k < grad.size(); ++k) {
        policy.logits[k] += cfg.learning_rate * grad[k];
        if (!std::isfinite(policy.logits[k])) {
          throw DivergenceDetected("logit " + std::to_string(k) + " of task '" + tasks[n].task_id +
                                   "' became non-finite at step " + std::to_string(step));
        }
      }
    }
    auto rec = evaluate_policies(tasks, policies);
    rec.step = step + 1;
    rec.sampled_reward_mean = sampled_sum / static_cast<double>(tasks.size() * cfg.group_size);
    result.trace.records.push_back(rec);
  }
  result.final = std::move(policies);
  return result;
}

double tail_step_variance(const std::vector<double>& series, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw InvariantViolation("tail_fraction must lie in (0, 1]");
  const auto n = series.size();
  const auto begin = n - static_cast<std::size_t>(std::ceil(static_cast<double>(n) * tail_fraction));
  std::vector<double> diffs;
  for (std::size_t i = begin + 1; i < n; ++i) diffs.push_back(series[i] - series[i - 1]);
  if (diffs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(diffs.size());
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  return var / static_cast<double>(diffs.size());
}

}  // namespace autorubric::sandbox
