#include "autorubric/reward/reward_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace autorubric::reward {
namespace {

constexpr double kNormalizationTolerance = 1e-9;

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw UnnormalizedDistribution(std::string(name) + " has an invalid entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kNormalizationTolerance) {
    throw UnnormalizedDistribution(std::string(name) + " sums to " + std::to_string(sum));
  }
}

}  // namespace

void validate(const RewardConfig& cfg) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw InvariantViolation("lambda must lie in [0,1]");
  if (!(cfg.std_epsilon > 0.0) || !std::isfinite(cfg.std_epsilon)) {
    throw InvariantViolation("std_epsilon must be positive");
  }
}

void validate(const SurrogateConfig& cfg) {
  if (!(cfg.clip_epsilon > 0.0) || !std::isfinite(cfg.clip_epsilon)) {
    throw InvariantViolation("clip_epsilon must be positive");
  }
  if (!(cfg.kl_beta >= 0.0) || !std::isfinite(cfg.kl_beta)) throw InvariantViolation("kl_beta must be >= 0");
}

NoRubricPolicy parse_no_rubric_policy(std::string_view text) {
  if (text == "answer_only") return NoRubricPolicy::kAnswerOnly;
  if (text == "error") return NoRubricPolicy::kError;
  throw ParseError("unknown no_rubric_policy '" + std::string(text) + "'");
}

std::string_view to_string(NoRubricPolicy policy) {
  return policy == NoRubricPolicy::kAnswerOnly ? "answer_only" : "error";
}

KlEstimator parse_kl_estimator(std::string_view text) {
  if (text == "exact_categorical") return KlEstimator::kExactCategorical;
  if (text == "k3") return KlEstimator::kK3;
  throw ParseError("unknown kl_estimator '" + std::string(text) + "'");
}

std::string_view to_string(KlEstimator estimator) {
  return estimator == KlEstimator::kExactCategorical ? "exact_categorical" : "k3";
}

double rubric_reward(std::span<const bool> verdicts) {
  if (verdicts.empty()) throw EmptyVerdicts("rubric reward needs at least one verdict");
  const auto hits = std::count(verdicts.begin(), verdicts.end(), true);
  return static_cast<double>(hits) / static_cast<double>(verdicts.size());
}

double rubric_reward(const std::vector<bool>& verdicts) {
  if (verdicts.empty()) throw EmptyVerdicts("rubric reward needs at least one verdict");
  const auto hits = std::count(verdicts.begin(), verdicts.end(), true);
  return static_cast<double>(hits) / static_cast<double>(verdicts.size());
}

double combine(double answer_reward, std::optional<double> rubric, const RewardConfig& cfg) {
  if (!rubric) {
    if (cfg.no_rubric_policy == NoRubricPolicy::kError) {
      throw MissingRubricReward("no rubric reward and no_rubric_policy=error");
    }
    return answer_reward;
  }
  return cfg.lambda * answer_reward + (1.0 - cfg.lambda) * *rubric;
}

RewardRecord make_reward_record(std::string trajectory_id, double answer_reward,
                                const std::optional<std::vector<bool>>& verdicts, const RewardConfig& cfg) {
  RewardRecord r;
  r.trajectory_id = std::move(trajectory_id);
  r.answer_reward = answer_reward;
  r.lambda_used = cfg.lambda;
  if (verdicts) {
    r.verdicts = *verdicts;
    r.rubric_reward = rubric_reward(r.verdicts);
  }
  r.combined_reward = combine(answer_reward, r.rubric_reward, cfg);
  validate_reward_record(r);
  return r;
}

AdvantageGroup group_advantages(std::span<const double> rewards, const RewardConfig& cfg, std::string problem_id) {
  if (rewards.size() < 2) throw GroupTooSmall("group needs at least 2 rewards, got " + std::to_string(rewards.size()));
  for (double r : rewards) {
    if (!std::isfinite(r)) throw InvariantViolation("rewards must be finite");
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double sd = std::sqrt(var);

  AdvantageGroup g;
  g.problem_id = std::move(problem_id);
  g.rewards.assign(rewards.begin(), rewards.end());
  g.advantages.assign(rewards.size(), 0.0);
  g.degenerate = sd < cfg.std_epsilon;
  if (!g.degenerate) {
    for (std::size_t i = 0; i < rewards.size(); ++i) g.advantages[i] = (rewards[i] - mean) / sd;
  }
  return g;
}

double importance_ratio(double logp_new, double logp_old) { return std::exp(logp_new - logp_old); }

double clipped_term(double ratio, double advantage, const SurrogateConfig& cfg) {
  const double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

bool clip_active(double ratio, double advantage, const SurrogateConfig& cfg) {
  if (advantage > 0.0) return ratio > 1.0 + cfg.clip_epsilon;
  if (advantage < 0.0) return ratio < 1.0 - cfg.clip_epsilon;
  return false;
}

double kl_k3(double logp_new, double logp_ref) {
  const double log_r = logp_ref - logp_new;
  return std::exp(log_r) - log_r - 1.0;
}

double kl_penalty(std::span<const double> dist_new, std::span<const double> dist_ref, const SurrogateConfig& cfg,
                  std::optional<std::size_t> sampled) {
  if (dist_new.size() != dist_ref.size() || dist_new.empty()) {
    throw SupportMismatch("distributions have supports of size " + std::to_string(dist_new.size()) + " and " +
                          std::to_string(dist_ref.size()));
  }
  check_distribution(dist_new, "dist_new");
  check_distribution(dist_ref, "dist_ref");

  if (cfg.kl_estimator == KlEstimator::kK3) {
    if (!sampled || *sampled >= dist_new.size()) throw InvariantViolation("k3 estimator needs a sampled index");
    const double p = dist_new[*sampled];
    const double q = dist_ref[*sampled];
    if (p <= 0.0) throw InvariantViolation("sampled token has zero probability");
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    return kl_k3(std::log(p), std::log(q));
  }

  double kl = 0.0;
  for (std::size_t k = 0; k < dist_new.size(); ++k) {
    const double p = dist_new[k];
    if (p == 0.0) continue;
    const double q = dist_ref[k];
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    kl += p * std::log(p / q);
  }
  // Rounding can leave a tiny negative for near-identical inputs.
  return std::max(kl, 0.0);
}

double surrogate_objective(std::span<const RolloutTokens> rollouts, std::span<const double> advantages,
                           const SurrogateConfig& cfg) {
  if (rollouts.size() != advantages.size()) throw InvariantViolation("one advantage per rollout is required");
  if (rollouts.empty()) throw GroupTooSmall("surrogate objective needs at least one rollout");
  double total = 0.0;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const auto& tokens = rollouts[i];
    if (tokens.empty()) throw InvariantViolation("rollout " + std::to_string(i) + " has no tokens");
    double sum = 0.0;
    for (const auto& t : tokens) {
      const double rho = importance_ratio(t.logp_new, t.logp_old);
      sum += clipped_term(rho, advantages[i], cfg) - cfg.kl_beta * t.kl;
    }
    total += sum / static_cast<double>(tokens.size());
  }
  return total / static_cast<double>(rollouts.size());
}

}  // namespace autorubric::reward
