#pragma once

#include <cstdint>
#include <vector>

#include "autorubric/sandbox/faithfulness.hpp"
#include "autorubric/sandbox/trainer.hpp"

namespace autorubric::sandbox {

struct RunSummary {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double initial_faithful_mass = 0.0;
  double final_faithful_mass = 0.0;
  double final_answer_reward = 0.0;
  double answer_tail_variance = 0.0;  // step-to-step variance over the last 20% of steps
  FaithfulnessReport faithfulness;    // planted-label judge on samples of the final policies
  TrainingTrace trace;
};

Json to_json(const RunSummary& s);  // omits the trace

struct ExperimentConfig {
  TrainConfig train;
  TaskSuiteConfig suite;
  std::size_t eval_samples_per_task = 200;
};

/// One training run with the ground-truth mock judge. The task suite and the
/// trainer share `seed`; `lambda` overrides cfg.train.reward.lambda.
RunSummary run_sandbox(double lambda, std::uint64_t seed, const ExperimentConfig& cfg);

}  // namespace autorubric::sandbox
