#include "autorubric/sandbox/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace autorubric::sandbox {

std::vector<double> TabularPolicy::log_probabilities() const {
  std::vector<double> out(logits.size());
  double max_z = -std::numeric_limits<double>::infinity();
  for (double l : logits) max_z = std::max(max_z, l / temperature);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l / temperature - max_z);
  const double log_norm = max_z + std::log(sum);
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] / temperature - log_norm;
  return out;
}

std::vector<double> TabularPolicy::probabilities() const {
  auto out = log_probabilities();
  for (double& v : out) v = std::exp(v);
  return out;
}

void validate(const TabularPolicy& policy) {
  if (policy.logits.empty()) throw InvariantViolation("policy has no logits");
  if (!(policy.temperature > 0.0) || !std::isfinite(policy.temperature)) {
    throw InvariantViolation("temperature must be positive");
  }
  for (double l : policy.logits) {
    if (!std::isfinite(l)) throw DivergenceDetected("policy logit is not finite");
  }
  const auto p = policy.probabilities();
  if (std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) > 1e-12) {
    throw InvariantViolation("softmax does not sum to 1");
  }
}

SampledGroup rollout_group(const TabularPolicy& policy, std::size_t group_size, std::mt19937_64& rng) {
  if (group_size < 2) throw GroupTooSmall("rollout group needs G >= 2");
  const auto logp = policy.log_probabilities();
  const auto probs = policy.probabilities();
  // Inverse-CDF sampling on a 53-bit uniform keeps draws identical across
  // standard libraries for a given seed.
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  SampledGroup g;
  g.choices.reserve(group_size);
  g.old_logps.reserve(group_size);
  for (std::size_t i = 0; i < group_size; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto k = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    k = std::min(k, probs.size() - 1);
    while (probs[k] == 0.0 && k > 0) --k;
    g.choices.push_back(k);
    g.old_logps.push_back(logp[k]);
  }
  return g;
}

SampledGroup rollout_group(const TabularPolicy& policy, std::size_t group_size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return rollout_group(policy, group_size, rng);
}

double tabular_surrogate(const TabularPolicy& policy, const SurrogateInputs& in, const reward::SurrogateConfig& cfg) {
  const auto logp = policy.log_probabilities();
  const auto probs = policy.probabilities();
  const std::size_t n = in.group.choices.size();
  double exact_kl = 0.0;
  if (cfg.kl_estimator == reward::KlEstimator::kExactCategorical) exact_kl = reward::kl_penalty(probs, in.ref_probs, cfg);

  std::vector<reward::RolloutTokens> rollouts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = in.group.choices[i];
    reward::TokenTerm token;
    token.logp_new = logp[a];
    token.logp_old = in.group.old_logps[i];
    token.kl = cfg.kl_estimator == reward::KlEstimator::kExactCategorical
                   ? exact_kl
                   : reward::kl_k3(logp[a], std::log(in.ref_probs[a]));
    rollouts[i].push_back(token);
  }
  return reward::surrogate_objective(rollouts, in.advantages, cfg);
}

std::vector<double> tabular_surrogate_gradient(const TabularPolicy& policy, const SurrogateInputs& in,
                                               const reward::SurrogateConfig& cfg) {
  const auto logp = policy.log_probabilities();
  const auto probs = policy.probabilities();
  const std::size_t k_count = probs.size();
  const std::size_t n = in.group.choices.size();
  const double inv_t = 1.0 / policy.temperature;
  std::vector<double> grad(k_count, 0.0);

  // d log p_a / d logit_k = (1[k == a] - p_k) / T
  auto add_score = [&](std::size_t a, double weight) {
    for (std::size_t k = 0; k < k_count; ++k) grad[k] -= weight * probs[k] * inv_t;
    grad[a] += weight * inv_t;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto a = in.group.choices[i];
    const double adv = in.advantages[i];
    const double rho = reward::importance_ratio(logp[a], in.group.old_logps[i]);
    if (!reward::clip_active(rho, adv, cfg)) add_score(a, adv * rho);
    if (cfg.kl_estimator == reward::KlEstimator::kK3 && cfg.kl_beta != 0.0) {
      // k3 = u - log u - 1 with u = q_a / p_a; d k3 / d log p_a = 1 - u.
      const double u = in.ref_probs[a] / probs[a];
      add_score(a, -cfg.kl_beta * (1.0 - u));
    }
  }
  for (double& g : grad) g /= static_cast<double>(n);

  if (cfg.kl_estimator == reward::KlEstimator::kExactCategorical && cfg.kl_beta != 0.0) {
    // d KL / d logit_k = p_k (log(p_k / q_k) - KL) / T, identical for every token.
    const double kl = reward::kl_penalty(probs, in.ref_probs, cfg);
    for (std::size_t k = 0; k < k_count; ++k) {
      grad[k] -= cfg.kl_beta * probs[k] * (logp[k] - std::log(in.ref_probs[k]) - kl) * inv_t;
    }
  }
  return grad;
}

}  // namespace autorubric::sandbox
