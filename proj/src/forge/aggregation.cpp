#include "autorubric/forge/aggregation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <mutex>
#include <thread>

#include "autorubric/judge/verdict_parser.hpp"

namespace autorubric::forge {

void validate(const AggregationConfig& cfg) {
  if (cfg.rollouts_per_problem < 1) throw InvariantViolation("rollouts_per_problem must be >= 1");
  if (cfg.min_correct < 1 || cfg.min_correct > cfg.rollouts_per_problem) {
    throw InvariantViolation("min_correct must lie in [1, rollouts_per_problem]");
  }
  if (cfg.max_trajectories_in_prompt < 1) throw InvariantViolation("max_trajectories_in_prompt must be >= 1");
  if (cfg.min_criteria < 1) throw InvariantViolation("min_criteria must be >= 1");
  if (cfg.min_criteria > cfg.max_criteria) throw InvariantViolation("min_criteria must not exceed max_criteria");
  if (cfg.concurrency < 1) throw InvariantViolation("concurrency must be >= 1");
}

std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json to_json(const RubricCorpusStats& s) {
  Json j;
  j["n_problems"] = s.n_problems;
  j["n_rubric_sets"] = s.n_rubric_sets;
  j["coverage"] = s.coverage;
  j["avg_criteria"] = s.avg_criteria;
  j["avg_words_per_criterion"] = s.avg_words_per_criterion;
  j["max_words_per_criterion"] = s.max_words_per_criterion;
  j["avg_words_per_set"] = s.avg_words_per_set;
  j["total_words"] = s.total_words;
  return j;
}

Json to_json(const AggregationReport& r) {
  Json j;
  j["built"] = r.built;
  j["reused"] = r.reused;
  j["skipped"] = r.skipped;
  Json failures = Json::array();
  for (const auto& f : r.failures) failures.push_back({{"problem_id", f.problem_id}, {"reason", f.reason}});
  j["failures"] = std::move(failures);
  j["stats"] = to_json(r.stats);
  return j;
}

std::vector<Trajectory> select_correct_subset(const ProblemInstance& problem, const std::vector<Trajectory>& rollouts,
                                              const verifier::VerifierConfig& cfg) {
  std::vector<Trajectory> correct;
  for (const auto& t : rollouts) {
    if (t.problem_id != problem.problem_id) {
      throw InvariantViolation("rollout '" + t.trajectory_id + "' belongs to '" + t.problem_id + "', not '" +
                               problem.problem_id + "'");
    }
    const auto answer = verifier::extract_final_answer(t, problem.answer_kind, cfg);
    if (verifier::verify(answer, problem.gold_answer, problem.answer_kind, cfg) == 1.0) correct.push_back(t);
  }
  return correct;
}

std::optional<RubricSet> build_rubrics(const ProblemInstance& problem, const std::vector<Trajectory>& correct,
                                       const AggregationConfig& cfg, judge::Judge& judge,
                                       const std::string& created_at) {
  if (correct.size() < static_cast<std::size_t>(cfg.min_correct)) return std::nullopt;

  const auto shown = std::min(correct.size(), static_cast<std::size_t>(cfg.max_trajectories_in_prompt));
  const std::span<const Trajectory> prompt_set(correct.data(), shown);
  const std::string reply = judge.compose_rubrics(problem, prompt_set, cfg.max_criteria);
  const auto texts = judge::parse_criteria_list(reply);

  const auto m = texts.size();
  if (m < static_cast<std::size_t>(cfg.min_criteria) || m > static_cast<std::size_t>(cfg.max_criteria)) {
    throw CriterionCountOutOfRange("judge produced " + std::to_string(m) + " criteria for '" + problem.problem_id +
                                   "', allowed [" + std::to_string(cfg.min_criteria) + ", " +
                                   std::to_string(cfg.max_criteria) + "]");
  }

  RubricSet set;
  set.problem_id = problem.problem_id;
  for (std::size_t i = 0; i < m; ++i) set.criteria.push_back({static_cast<int>(i) + 1, texts[i]});
  // Every correct rollout supports the set, including those not shown.
  for (const auto& t : correct) set.source_trajectory_ids.push_back(t.trajectory_id);
  set.created_at = created_at;
  validate(set, static_cast<std::size_t>(cfg.min_correct));
  return set;
}

std::map<std::string, std::vector<Trajectory>> group_rollouts(const std::vector<Trajectory>& rollouts) {
  std::map<std::string, std::vector<Trajectory>> grouped;
  for (const auto& t : rollouts) grouped[t.problem_id].push_back(t);
  return grouped;
}

AggregationReport run_aggregation(const std::vector<ProblemInstance>& corpus,
                                  const std::map<std::string, std::vector<Trajectory>>& rollouts,
                                  const AggregationConfig& cfg, const verifier::VerifierConfig& verifier_cfg,
                                  judge::Judge& judge, const std::filesystem::path& out_dir) {
  validate(cfg);
  validate_corpus(corpus);
  std::vector<std::string> missing;
  for (const auto& p : corpus) {
    if (!rollouts.count(p.problem_id)) missing.push_back(p.problem_id);
  }
  if (!missing.empty()) {
    throw InvariantViolation("rollout store has no rollouts for " + std::to_string(missing.size()) +
                             " problem(s), first '" + missing.front() + "'");
  }

  const RubricStore existing = RubricStore::load(out_dir);
  const std::string created_at = cfg.created_at.empty() ? utc_timestamp_now() : cfg.created_at;

  enum class Outcome { kReused, kBuilt, kSkipped, kFailed };
  struct Slot {
    Outcome outcome = Outcome::kSkipped;
    std::optional<RubricSet> set;
    std::string reason;
  };
  std::vector<Slot> slots(corpus.size());
  std::mutex append_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      const auto& problem = corpus[i];
      auto& slot = slots[i];
      if (const auto* stored = existing.find(problem.problem_id)) {
        slot.outcome = Outcome::kReused;
        slot.set = *stored;
        continue;
      }
      auto group = rollouts.at(problem.problem_id);
      if (group.size() > static_cast<std::size_t>(cfg.rollouts_per_problem)) group.resize(cfg.rollouts_per_problem);
      try {
        const auto correct = select_correct_subset(problem, group, verifier_cfg);
        slot.set = build_rubrics(problem, correct, cfg, judge, created_at);
        slot.outcome = slot.set ? Outcome::kBuilt : Outcome::kSkipped;
        if (slot.set) {
          std::lock_guard lock(append_mutex);
          append_record(out_dir, *slot.set);
        }
      } catch (const Error& e) {
        slot.outcome = Outcome::kFailed;
        slot.reason = e.what();
      }
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency), std::max<std::size_t>(corpus.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < n_workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  AggregationReport report;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& slot = slots[i];
    switch (slot.outcome) {
      case Outcome::kReused: ++report.reused; break;
      case Outcome::kBuilt: ++report.built; break;
      case Outcome::kSkipped: ++report.skipped; break;
      case Outcome::kFailed: report.failures.push_back({corpus[i].problem_id, slot.reason}); break;
    }
    if (slot.set) report.store.put(std::move(*slot.set));
  }
  report.store.save(out_dir);
  report.stats = compute_stats(report.store, corpus.size());
  return report;
}

RubricCorpusStats compute_stats(const RubricStore& store, std::size_t corpus_size) {
  if (corpus_size < store.size()) {
    throw InvariantViolation("corpus size " + std::to_string(corpus_size) + " is smaller than the stored set count " +
                             std::to_string(store.size()));
  }
  RubricCorpusStats s;
  s.n_problems = corpus_size;
  s.n_rubric_sets = store.size();
  std::size_t criteria = 0;
  for (const auto& set : store.sets()) {
    for (const auto& c : set.criteria) {
      const auto words = count_words(c.text);
      s.total_words += words;
      s.max_words_per_criterion = std::max(s.max_words_per_criterion, words);
      ++criteria;
    }
  }
  if (s.n_problems > 0) s.coverage = static_cast<double>(s.n_rubric_sets) / static_cast<double>(s.n_problems);
  if (s.n_rubric_sets > 0) {
    s.avg_criteria = static_cast<double>(criteria) / static_cast<double>(s.n_rubric_sets);
    s.avg_words_per_set = static_cast<double>(s.total_words) / static_cast<double>(s.n_rubric_sets);
  }
  if (criteria > 0) s.avg_words_per_criterion = static_cast<double>(s.total_words) / static_cast<double>(criteria);
  return s;
}

}  // namespace autorubric::forge
