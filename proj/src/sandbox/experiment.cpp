#include "autorubric/sandbox/experiment.hpp"

namespace autorubric::sandbox {

Json to_json(const RunSummary& s) {
  Json j;
  j["lambda"] = s.lambda;
  j["seed"] = s.seed;
  j["initial_faithful_mass"] = s.initial_faithful_mass;
  j["final_faithful_mass"] = s.final_faithful_mass;
  j["final_answer_reward"] = s.final_answer_reward;
  j["answer_tail_variance"] = s.answer_tail_variance;
  j["faithfulness"] = to_json(s.faithfulness);
  return j;
}

RunSummary run_sandbox(double lambda, std::uint64_t seed, const ExperimentConfig& cfg) {
  auto suite = cfg.suite;
  suite.seed = seed;
  const auto tasks = make_task_suite(suite);
  judge::MockJudge judge(planted_label_rules(tasks));

  auto train_cfg = cfg.train;
  train_cfg.reward.lambda = lambda;
  train_cfg.seed = seed;
  auto result = train(tasks, judge, train_cfg);

  RunSummary s;
  s.lambda = lambda;
  s.seed = seed;
  s.initial_faithful_mass = evaluate_policies(tasks, result.initial).faithful_mass;
  s.final_faithful_mass = result.trace.records.back().faithful_mass;
  s.final_answer_reward = result.trace.records.back().answer_reward_mean;
  s.answer_tail_variance = tail_step_variance(result.trace.answer_reward());
  const auto samples = sample_policy_corpus(tasks, result.final, cfg.eval_samples_per_task, seed + 0x9e3779b97f4a7c15ULL);
  if (!samples.empty()) s.faithfulness = faithfulness_eval(samples, judge);
  s.trace = std::move(result.trace);
  return s;
}

}  // namespace autorubric::sandbox
