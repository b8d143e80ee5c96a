#include "autorubric/service/reward_service.hpp"

#include <atomic>
#include <condition_variable>
#include <thread>
#include <unordered_set>

namespace autorubric::service {
namespace {

constexpr const char* kJudgeUnavailable = "judge_unavailable";
constexpr const char* kJudgeTimeout = "judge_timeout";

struct ItemOutcome {
  std::optional<RewardRecord> record;
  std::string failure;  // reason code plus detail, when record is empty
  bool unavailable = false;
};

// Shared between the request thread and the fan-out workers; a worker stuck
// in a judge call past its deadline may outlive the request.
struct BatchState {
  std::mutex mutex;
  std::condition_variable cv;
  std::vector<ItemOutcome> outcomes;
  std::vector<std::optional<std::chrono::steady_clock::time_point>> started;
  std::vector<bool> finalized;
  std::size_t next = 0;
  std::size_t remaining = 0;
};

struct Job {
  std::vector<Trajectory> trajectories;
  std::vector<const ProblemInstance*> problems;
  std::shared_ptr<const forge::RubricStore> store;
  std::shared_ptr<judge::Judge> judge;
  reward::RewardConfig reward;
  verifier::VerifierConfig verifier;
};

ItemOutcome score_one(const Job& job, std::size_t i) {
  const auto& traj = job.trajectories[i];
  const auto& problem = *job.problems[i];
  ItemOutcome out;
  const auto answer = verifier::extract_final_answer(traj, problem.answer_kind, job.verifier);
  const double answer_reward = verifier::verify(answer, problem.gold_answer, problem.answer_kind, job.verifier);

  std::optional<std::vector<bool>> verdicts;
  if (const auto* rubrics = job.store->find(problem.problem_id)) {
    try {
      verdicts = job.judge->score_against_rubrics(traj, *rubrics).verdicts;
    } catch (const JudgeUnavailable& e) {
      out.failure = std::string(kJudgeUnavailable) + ": " + e.what();
      out.unavailable = true;
      return out;
    } catch (const UnparseableVerdict& e) {
      out.failure = std::string("unparseable_verdict: ") + e.what();
      return out;
    }
    if (verdicts->size() != rubrics->criteria.size()) {
      out.failure = "unparseable_verdict: expected " + std::to_string(rubrics->criteria.size()) + " verdicts, got " +
                    std::to_string(verdicts->size());
      return out;
    }
  } else if (job.reward.no_rubric_policy == reward::NoRubricPolicy::kError) {
    out.failure = "missing_rubric: no rubric set for '" + problem.problem_id + "'";
    return out;
  }
  out.record = reward::make_reward_record(traj.trajectory_id, answer_reward, verdicts, job.reward);
  return out;
}

void run_worker(std::shared_ptr<const Job> job, std::shared_ptr<BatchState> state) {
  const std::size_t n = job->trajectories.size();
  while (true) {
    std::size_t i = 0;
    {
      std::lock_guard lock(state->mutex);
      if (state->next >= n) return;
      i = state->next++;
      state->started[i] = std::chrono::steady_clock::now();
    }
    ItemOutcome outcome;
    try {
      outcome = score_one(*job, i);
    } catch (const std::exception& e) {
      outcome.failure = std::string("internal_error: ") + e.what();
    }
    std::lock_guard lock(state->mutex);
    if (!state->finalized[i]) {
      state->outcomes[i] = std::move(outcome);
      state->finalized[i] = true;
      --state->remaining;
      state->cv.notify_all();
    }
  }
}

}  // namespace

ScoreBatchRequest score_request_from_json(const Json& j) {
  auto bad = [](const std::string& msg) { return ServiceError(400, "malformed_request", msg); };
  if (!j.is_object()) throw bad("request body must be an object");
  if (!j.contains("items") || !j.at("items").is_array()) throw bad("'items' must be an array");
  ScoreBatchRequest r;
  for (const auto& item : j.at("items")) {
    if (!item.is_object()) throw bad("each item must be an object");
    if (!item.contains("problem_id") || !item.at("problem_id").is_string()) throw bad("item.problem_id must be a string");
    if (!item.contains("raw_text") || !item.at("raw_text").is_string()) throw bad("item.raw_text must be a string");
    ScoreItem s;
    s.problem_id = item.at("problem_id").get<std::string>();
    s.raw_text = item.at("raw_text").get<std::string>();
    if (item.contains("trajectory_id") && !item.at("trajectory_id").is_null()) {
      if (!item.at("trajectory_id").is_string()) throw bad("item.trajectory_id must be a string");
      s.trajectory_id = item.at("trajectory_id").get<std::string>();
    }
    r.items.push_back(std::move(s));
  }
  if (j.contains("lambda_override") && !j.at("lambda_override").is_null()) {
    if (!j.at("lambda_override").is_number()) throw bad("lambda_override must be a number");
    r.lambda_override = j.at("lambda_override").get<double>();
  }
  if (j.contains("group_by_problem")) {
    if (!j.at("group_by_problem").is_boolean()) throw bad("group_by_problem must be a boolean");
    r.group_by_problem = j.at("group_by_problem").get<bool>();
  }
  return r;
}

Json to_json(const ScoreBatchRequest& r) {
  Json items = Json::array();
  for (const auto& item : r.items) {
    Json i;
    i["problem_id"] = item.problem_id;
    i["raw_text"] = item.raw_text;
    if (item.trajectory_id) i["trajectory_id"] = *item.trajectory_id;
    items.push_back(std::move(i));
  }
  Json j;
  j["items"] = std::move(items);
  j["lambda_override"] = r.lambda_override ? Json(*r.lambda_override) : Json(nullptr);
  j["group_by_problem"] = r.group_by_problem;
  return j;
}

Json to_json(const ScoreBatchResponse& r) {
  Json records = Json::array();
  for (const auto& rec : r.records) records.push_back(to_json(rec));
  Json groups = Json::array();
  for (const auto& g : r.advantage_groups) groups.push_back(to_json(g));
  Json failures = Json::array();
  for (const auto& f : r.judge_failures) failures.push_back({{"trajectory_id", f.trajectory_id}, {"reason", f.reason}});
  Json j;
  j["records"] = std::move(records);
  j["advantage_groups"] = std::move(groups);
  j["judge_failures"] = std::move(failures);
  return j;
}

ScoreBatchResponse score_response_from_json(const Json& j) {
  ScoreBatchResponse r;
  for (const auto& rec : j.at("records")) r.records.push_back(reward_record_from_json(rec));
  for (const auto& g : j.at("advantage_groups")) r.advantage_groups.push_back(advantage_group_from_json(g));
  for (const auto& f : j.at("judge_failures")) {
    r.judge_failures.push_back({f.at("trajectory_id").get<std::string>(), f.at("reason").get<std::string>()});
  }
  return r;
}

Json to_json(const Health& h) {
  Json j;
  j["status"] = h.status;
  j["judge_reachable"] = h.judge_reachable;
  j["rubric_count"] = h.rubric_count;
  j["corpus_count"] = h.corpus_count;
  return j;
}

std::vector<AdvantageGroup> advantage_groups_for(const std::vector<RewardRecord>& records,
                                                 const std::vector<std::string>& problem_ids,
                                                 const reward::RewardConfig& cfg) {
  if (records.size() != problem_ids.size()) throw InvariantViolation("one problem id per record is required");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = members.try_emplace(problem_ids[i]);
    if (inserted) order.push_back(problem_ids[i]);
    it->second.push_back(i);
  }
  std::vector<AdvantageGroup> groups;
  for (const auto& pid : order) {
    const auto& idx = members.at(pid);
    if (idx.size() < 2) continue;
    std::vector<double> rewards;
    std::vector<std::string> ids;
    for (auto i : idx) {
      rewards.push_back(records[i].combined_reward);
      ids.push_back(records[i].trajectory_id);
    }
    auto group = reward::group_advantages(rewards, cfg, pid);
    group.trajectory_ids = std::move(ids);
    groups.push_back(std::move(group));
  }
  return groups;
}

RewardService::RewardService(std::vector<ProblemInstance> corpus, forge::RubricStore store,
                             std::shared_ptr<judge::Judge> judge, ServiceSettings settings)
    : corpus_(std::move(corpus)),
      judge_(std::move(judge)),
      settings_(std::move(settings)),
      store_(std::make_shared<const forge::RubricStore>(std::move(store))) {
  if (!judge_) throw InvariantViolation("reward service needs a judge");
  validate_corpus(corpus_);
  reward::validate(settings_.reward);
  verifier::validate(settings_.verifier);
  if (settings_.fanout_workers < 1) throw InvariantViolation("fanout_workers must be >= 1");
  for (std::size_t i = 0; i < corpus_.size(); ++i) by_id_.emplace(corpus_[i].problem_id, i);
}

void RewardService::replace_store(forge::RubricStore store) {
  auto next = std::make_shared<const forge::RubricStore>(std::move(store));
  std::lock_guard lock(store_mutex_);
  store_ = std::move(next);
}

std::shared_ptr<const forge::RubricStore> RewardService::store() const {
  std::lock_guard lock(store_mutex_);
  return store_;
}

RubricLookup RewardService::rubrics(const std::string& problem_id) const {
  RubricLookup out;
  const auto snapshot = store();
  if (const auto* set = snapshot->find(problem_id)) {
    out.status = RubricLookupStatus::kFound;
    out.set = *set;
  } else if (by_id_.count(problem_id)) {
    out.status = RubricLookupStatus::kNoRubric;
  }
  return out;
}

Health RewardService::health() const {
  Health h;
  {
    std::lock_guard lock(probe_mutex_);
    const auto now = std::chrono::steady_clock::now();
    if (!probed_at_ || now - *probed_at_ >= settings_.probe_ttl) {
      reachable_ = judge_->probe();
      probed_at_ = now;
    }
    h.judge_reachable = reachable_;
  }
  h.status = h.judge_reachable ? "ok" : "degraded";
  h.rubric_count = store()->size();
  h.corpus_count = corpus_.size();
  return h;
}

ScoreBatchResponse RewardService::score(const ScoreBatchRequest& request) const {
  const std::size_t n = request.items.size();
  if (n == 0) throw ServiceError(400, "empty_batch", "items must be non-empty");
  if (n > settings_.max_batch_size) {
    throw ServiceError(400, "batch_too_large",
                       "batch of " + std::to_string(n) + " exceeds max_batch_size " +
                           std::to_string(settings_.max_batch_size));
  }
  auto job = std::make_shared<Job>();
  job->reward = settings_.reward;
  if (request.lambda_override) {
    const double l = *request.lambda_override;
    if (!(l >= 0.0 && l <= 1.0)) throw ServiceError(400, "invalid_lambda", "lambda_override must lie in [0, 1]");
    job->reward.lambda = l;
  }
  job->verifier = settings_.verifier;
  job->judge = judge_;
  job->store = store();

  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& item = request.items[i];
    const auto it = by_id_.find(item.problem_id);
    if (it == by_id_.end()) {
      throw ServiceError(404, "unknown_problem", "unknown problem_id '" + item.problem_id + "'");
    }
    std::string id = item.trajectory_id.value_or("item-" + std::to_string(i));
    if (id.empty()) throw ServiceError(400, "malformed_request", "trajectory_id must be non-empty");
    if (!seen_ids.insert(id).second) {
      throw ServiceError(400, "duplicate_trajectory_id", "duplicate trajectory_id '" + id + "'");
    }
    job->problems.push_back(&corpus_[it->second]);
    job->trajectories.push_back(make_trajectory(std::move(id), item.problem_id, item.raw_text));
  }

  auto state = std::make_shared<BatchState>();
  state->outcomes.resize(n);
  state->started.resize(n);
  state->finalized.assign(n, false);
  state->remaining = n;

  const std::size_t workers = std::min(settings_.fanout_workers, n);
  auto spawn = [&] { std::thread(run_worker, std::shared_ptr<const Job>(job), state).detach(); };
  for (std::size_t w = 0; w < workers; ++w) spawn();

  {
    std::unique_lock lock(state->mutex);
    while (state->remaining > 0) {
      // Wake at the earliest per-item deadline among running items.
      std::optional<std::chrono::steady_clock::time_point> wake;
      for (std::size_t i = 0; i < n; ++i) {
        if (state->started[i] && !state->finalized[i]) {
          const auto deadline = *state->started[i] + settings_.item_timeout;
          if (!wake || deadline < *wake) wake = deadline;
        }
      }
      if (wake) {
        state->cv.wait_until(lock, *wake);
      } else {
        state->cv.wait(lock);
      }
      const auto now = std::chrono::steady_clock::now();
      std::size_t expired = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (state->started[i] && !state->finalized[i] && now - *state->started[i] >= settings_.item_timeout) {
          state->outcomes[i].failure = std::string(kJudgeTimeout) + ": no judge response within " +
                                       std::to_string(settings_.item_timeout.count()) + " ms";
          state->outcomes[i].unavailable = true;
          state->finalized[i] = true;
          --state->remaining;
          ++expired;
        }
      }
      // A worker stuck past its deadline is replaced so queued items keep moving.
      for (std::size_t k = 0; k < expired && state->next < n; ++k) spawn();
    }
  }

  ScoreBatchResponse response;
  std::vector<std::string> problem_ids;
  std::size_t unavailable = 0;
  std::lock_guard lock(state->mutex);
  for (std::size_t i = 0; i < n; ++i) {
    auto& outcome = state->outcomes[i];
    if (outcome.record) {
      response.records.push_back(std::move(*outcome.record));
      problem_ids.push_back(job->trajectories[i].problem_id);
    } else {
      if (outcome.unavailable) ++unavailable;
      response.judge_failures.push_back({job->trajectories[i].trajectory_id, outcome.failure});
    }
  }
  if (unavailable == n) throw ServiceError(503, "judge_unavailable", "judge unavailable for every item in the batch");
  if (request.group_by_problem) response.advantage_groups = advantage_groups_for(response.records, problem_ids, job->reward);
  return response;
}

}  // namespace autorubric::service
