#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "autorubric/reward/reward_engine.hpp"

namespace autorubric::sandbox {

/// Softmax policy over one task's template space.
struct TabularPolicy {
  std::vector<double> logits;
  double temperature = 1.0;

  std::vector<double> probabilities() const;
  std::vector<double> log_probabilities() const;
};

void validate(const TabularPolicy& policy);

struct SampledGroup {
  std::vector<std::size_t> choices;  // template index per rollout
  std::vector<double> old_logps;     // log-probability under the sampling policy
};

/// G i.i.d. draws from softmax(logits / temperature).
SampledGroup rollout_group(const TabularPolicy& policy, std::size_t group_size, std::mt19937_64& rng);
SampledGroup rollout_group(const TabularPolicy& policy, std::size_t group_size, std::uint64_t seed);

/// Everything the tabular surrogate needs besides the current logits.
struct SurrogateInputs {
  SampledGroup group;
  std::vector<double> advantages;
  std::vector<double> ref_probs;
};

/// GRPO surrogate for the tabular policy, evaluated through the reward
/// engine. Each rollout is a single token (the template choice).
double tabular_surrogate(const TabularPolicy& policy, const SurrogateInputs& inputs,
                         const reward::SurrogateConfig& cfg);

/// Closed-form gradient of tabular_surrogate with respect to the logits.
std::vector<double> tabular_surrogate_gradient(const TabularPolicy& policy, const SurrogateInputs& inputs,
                                               const reward::SurrogateConfig& cfg);

}  // namespace autorubric::sandbox
