#pragma once

#include <cstdint>
#include <vector>

#include "autorubric/judge/judge.hpp"
#include "autorubric/reward/reward_engine.hpp"
#include "autorubric/sandbox/policy.hpp"
#include "autorubric/sandbox/tasks.hpp"
#include "autorubric/verifier/answer_verifier.hpp"

namespace autorubric::sandbox {

struct TrainConfig {
  reward::RewardConfig reward;
  reward::SurrogateConfig surrogate;
  std::size_t steps = 300;
  double learning_rate = 0.5;
  std::size_t group_size = 8;
  std::uint64_t seed = 7;
  double temperature = 1.0;
  verifier::VerifierConfig verifier;
};

void validate(const TrainConfig& cfg);

/// Policy statistics after one update, averaged over tasks. Values are exact
/// expectations under the current policy (the template space is enumerable),
/// so the curves carry no sampling noise of their own.
struct TraceRecord {
  std::size_t step = 0;
  double answer_reward_mean = 0.0;
  double rubric_reward_mean = 0.0;
  double mean_length = 0.0;
  double faithful_mass = 0.0;
  double sampled_reward_mean = 0.0;  // mean combined reward of the rollouts drawn at this step
};

struct TrainingTrace {
  std::vector<TraceRecord> records;

  std::vector<double> answer_reward() const;
  std::vector<double> rubric_reward() const;
  std::vector<double> mean_length() const;
  std::vector<double> faithful_mass() const;
};

struct TrainResult {
  TrainingTrace trace;
  std::vector<TabularPolicy> initial;
  std::vector<TabularPolicy> final;
};

/// Expected statistics of a set of policies on their tasks; `step` is left 0.
TraceRecord evaluate_policies(const std::vector<SyntheticTask>& tasks, const std::vector<TabularPolicy>& policies);

std::vector<TabularPolicy> initial_policies(const std::vector<SyntheticTask>& tasks, double temperature);

/// GRPO on tabular policies, one policy per task. Each step samples one group
/// per task from the current policy, scores it (verifier for the answer, the
/// judge for rubric verdicts unless lambda is 1), and takes one gradient-ascent
/// step on the surrogate; the old policy is refreshed every step and the KL
/// reference is the initial policy.
TrainResult train(const std::vector<SyntheticTask>& tasks, judge::Judge& judge, const TrainConfig& cfg);

/// Variance of the first differences of the last `tail_fraction` of a series.
double tail_step_variance(const std::vector<double>& series, double tail_fraction = 0.2);

}  // namespace autorubric::sandbox
