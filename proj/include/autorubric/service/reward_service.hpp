#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "autorubric/forge/rubric_store.hpp"
#include "autorubric/judge/judge.hpp"
#include "autorubric/reward/reward_engine.hpp"
#include "autorubric/verifier/answer_verifier.hpp"

namespace autorubric::service {

/// Request-level rejection carrying an HTTP status and a short reason code.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string reason, const std::string& message)
      : Error(message), status_(status), reason_(std::move(reason)) {}
  int status() const { return status_; }
  const std::string& reason() const { return reason_; }

 private:
  int status_;
  std::string reason_;
};

struct ScoreItem {
  std::string problem_id;
  std::string raw_text;
  std::optional<std::string> trajectory_id;  // defaults to "item-<index>"
};

struct ScoreBatchRequest {
  std::vector<ScoreItem> items;
  std::optional<double> lambda_override;
  bool group_by_problem = false;
};

struct ItemFailure {
  std::string trajectory_id;
  std::string reason;
};

struct ScoreBatchResponse {
  std::vector<RewardRecord> records;
  std::vector<AdvantageGroup> advantage_groups;
  std::vector<ItemFailure> judge_failures;
};

/// Throws ServiceError(400) on a malformed body.
ScoreBatchRequest score_request_from_json(const Json& j);
Json to_json(const ScoreBatchRequest& r);
Json to_json(const ScoreBatchResponse& r);
ScoreBatchResponse score_response_from_json(const Json& j);

struct ServiceSettings {
  reward::RewardConfig reward;
  verifier::VerifierConfig verifier;
  std::size_t max_batch_size = 16384;
  std::size_t fanout_workers = 16;
  std::chrono::milliseconds item_timeout{120000};
  std::chrono::seconds probe_ttl{30};
};

struct Health {
  std::string status;  // "ok" or "degraded"
  bool judge_reachable = false;
  std::size_t rubric_count = 0;
  std::size_t corpus_count = 0;
};

Json to_json(const Health& h);

enum class RubricLookupStatus { kFound, kNoRubric, kUnknownProblem };

struct RubricLookup {
  RubricLookupStatus status = RubricLookupStatus::kUnknownProblem;
  std::optional<RubricSet> set;
};

/// Scores trajectory batches against a read-only rubric store. Safe for
/// concurrent calls; the store can be swapped atomically between requests.
class RewardService {
 public:
  RewardService(std::vector<ProblemInstance> corpus, forge::RubricStore store, std::shared_ptr<judge::Judge> judge,
                ServiceSettings settings);

  /// Throws ServiceError: 400 malformed or oversized, 404 unknown problem_id,
  /// 503 when every item failed because the judge was unavailable.
  ScoreBatchResponse score(const ScoreBatchRequest& request) const;

  RubricLookup rubrics(const std::string& problem_id) const;
  Health health() const;

  void replace_store(forge::RubricStore store);
  std::shared_ptr<const forge::RubricStore> store() const;
  const ServiceSettings& settings() const { return settings_; }

 private:
  std::vector<ProblemInstance> corpus_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::shared_ptr<judge::Judge> judge_;
  ServiceSettings settings_;

  mutable std::mutex store_mutex_;
  std::shared_ptr<const forge::RubricStore> store_;

  mutable std::mutex probe_mutex_;
  mutable std::optional<std::chrono::steady_clock::time_point> probed_at_;
  mutable bool reachable_ = false;
};

/// Advantage groups over records in first-appearance order of problem ids;
/// only groups with at least two members are returned.
std::vector<AdvantageGroup> advantage_groups_for(const std::vector<RewardRecord>& records,
                                                 const std::vector<std::string>& problem_ids,
                                                 const reward::RewardConfig& cfg);

}  // namespace autorubric::service
