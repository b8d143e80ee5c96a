#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "autorubric/core/model.hpp"

namespace autorubric::reward {

enum class NoRubricPolicy { kAnswerOnly, kError };

struct RewardConfig {
  double lambda = 0.5;  // weight on the answer reward
  double std_epsilon = 1e-8;
  NoRubricPolicy no_rubric_policy = NoRubricPolicy::kAnswerOnly;
};

enum class KlEstimator { kExactCategorical, kK3 };

struct SurrogateConfig {
  double clip_epsilon = 0.2;
  double kl_beta = 0.01;
  KlEstimator kl_estimator = KlEstimator::kExactCategorical;
};

void validate(const RewardConfig& cfg);
void validate(const SurrogateConfig& cfg);

NoRubricPolicy parse_no_rubric_policy(std::string_view text);
std::string_view to_string(NoRubricPolicy policy);
KlEstimator parse_kl_estimator(std::string_view text);
std::string_view to_string(KlEstimator estimator);

/// Fraction of satisfied criteria. Throws EmptyVerdicts on an empty list.
double rubric_reward(std::span<const bool> verdicts);
double rubric_reward(const std::vector<bool>& verdicts);

/// lambda * answer + (1 - lambda) * rubric. Without a rubric reward the answer
/// reward passes through, or MissingRubricReward under NoRubricPolicy::kError.
double combine(double answer_reward, std::optional<double> rubric_reward, const RewardConfig& cfg);

/// Builds a validated RewardRecord from an answer reward and optional verdicts.
RewardRecord make_reward_record(std::string trajectory_id, double answer_reward,
                                const std::optional<std::vector<bool>>& verdicts, const RewardConfig& cfg);

/// Group z-score with population std. Groups whose std falls below
/// std_epsilon are flagged degenerate and get all-zero advantages.
AdvantageGroup group_advantages(std::span<const double> rewards, const RewardConfig& cfg,
                                std::string problem_id = {});

double importance_ratio(double logp_new, double logp_old);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double clipped_term(double ratio, double advantage, const SurrogateConfig& cfg);

/// True when the clipped branch is the one selected by the min, i.e. the term
/// has zero gradient with respect to the ratio.
bool clip_active(double ratio, double advantage, const SurrogateConfig& cfg);

/// KL between two categorical distributions over the same support. The exact
/// estimator sums over the support; k3 evaluates the per-token estimator at
/// `sampled` (required for k3).
double kl_penalty(std::span<const double> dist_new, std::span<const double> dist_ref, const SurrogateConfig& cfg,
                  std::optional<std::size_t> sampled = std::nullopt);

/// k3 estimator for one sampled token: r - log r - 1 with r = p_ref / p_new.
double kl_k3(double logp_new, double logp_ref);

struct TokenTerm {
  double logp_new = 0.0;
  double logp_old = 0.0;
  double kl = 0.0;  // per-token KL term, already estimated
};

using RolloutTokens = std::vector<TokenTerm>;

/// (1/G) sum_i (1/|o_i|) sum_t [clipped_term(rho_it, A_i) - beta * kl_it].
double surrogate_objective(std::span<const RolloutTokens> rollouts, std::span<const double> advantages,
                           const SurrogateConfig& cfg);

}  // namespace autorubric::reward
