#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autorubric/core/model.hpp"
#include "autorubric/forge/rubric_store.hpp"
#include "autorubric/judge/judge.hpp"
#include "autorubric/verifier/answer_verifier.hpp"

namespace autorubric::forge {

struct AggregationConfig {
  int rollouts_per_problem = 8;        // rollouts considered per problem (K)
  int min_correct = 4;                 // a problem needs more than 3 correct rollouts
  int max_trajectories_in_prompt = 8;  // cap on correct rollouts shown to the judge
  int min_criteria = 1;
  int max_criteria = 10;
  int concurrency = 1;     // problems judged in parallel
  std::string created_at;  // timestamp stamped on new sets; empty means now (UTC)
};

void validate(const AggregationConfig& cfg);

struct RubricCorpusStats {
  std::size_t n_problems = 0;
  std::size_t n_rubric_sets = 0;
  double coverage = 0.0;
  double avg_criteria = 0.0;
  double avg_words_per_criterion = 0.0;
  std::size_t max_words_per_criterion = 0;
  double avg_words_per_set = 0.0;
  std::size_t total_words = 0;

  bool operator==(const RubricCorpusStats&) const = default;
};

Json to_json(const RubricCorpusStats& stats);

/// Rollouts whose extracted answer verifies against the gold answer, in input
/// order. Throws InvariantViolation if a rollout belongs to another problem.
std::vector<Trajectory> select_correct_subset(const ProblemInstance& problem, const std::vector<Trajectory>& rollouts,
                                              const verifier::VerifierConfig& cfg = {});

/// Distills a rubric set from correct rollouts, or nullopt when fewer than
/// min_correct are available. Throws CriterionCountOutOfRange when the parsed
/// list length falls outside [min_criteria, max_criteria]; judge errors
/// propagate unchanged.
std::optional<RubricSet> build_rubrics(const ProblemInstance& problem, const std::vector<Trajectory>& correct,
                                       const AggregationConfig& cfg, judge::Judge& judge,
                                       const std::string& created_at);

struct AggregationFailure {
  std::string problem_id;
  std::string reason;
};

struct AggregationReport {
  RubricStore store;
  RubricCorpusStats stats;
  std::vector<AggregationFailure> failures;
  std::size_t built = 0;    // new sets produced by this run
  std::size_t reused = 0;   // sets already present in the output store
  std::size_t skipped = 0;  // problems below min_correct
};

Json to_json(const AggregationReport& report);

/// Groups rollouts by problem id, keeping file order within each group.
std::map<std::string, std::vector<Trajectory>> group_rollouts(const std::vector<Trajectory>& rollouts);

/// Builds one rubric set per qualifying problem and persists the store in
/// corpus order under out_dir. Problems that already have a stored set are
/// not re-judged. Judge failures are collected per problem and the run
/// continues.
AggregationReport run_aggregation(const std::vector<ProblemInstance>& corpus,
                                  const std::map<std::string, std::vector<Trajectory>>& rollouts,
                                  const AggregationConfig& cfg, const verifier::VerifierConfig& verifier_cfg,
                                  judge::Judge& judge, const std::filesystem::path& out_dir);

/// Corpus statistics; words are whitespace-separated tokens and averages run
/// over stored sets only. Empty stores report zero averages.
RubricCorpusStats compute_stats(const RubricStore& store, std::size_t corpus_size);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp_now();

}  // namespace autorubric::forge
