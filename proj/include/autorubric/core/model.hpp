#pragma once

// Shared domain vocabulary. Every type here is a plain value; the validate_*
// functions enforce the documented invariants and throw InvariantViolation
// naming the first invariant that fails. Parsing from the line-delimited JSON
// form always validates.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "autorubric/core/errors.hpp"

namespace autorubric {

using Json = nlohmann::ordered_json;

enum class AnswerKind { kMultipleChoice, kFreeForm };

std::string_view to_string(AnswerKind kind);
AnswerKind parse_answer_kind(std::string_view text);

struct ProblemInstance {
  std::string problem_id;
  std::string question_text;
  std::string visual_ref;  // opaque; carried for provenance, never decoded
  std::string gold_answer;
  AnswerKind answer_kind = AnswerKind::kFreeForm;

  bool operator==(const ProblemInstance&) const = default;
};

/// Separator placed between steps when rebuilding raw_text.
inline constexpr std::string_view kStepSeparator = "\n";

struct Trajectory {
  std::string trajectory_id;
  std::string problem_id;
  std::vector<std::string> steps;
  std::string raw_text;
  std::optional<std::string> final_answer;

  bool operator==(const Trajectory&) const = default;
};

/// Builds a trajectory whose steps are the separator-delimited lines of raw_text.
Trajectory make_trajectory(std::string trajectory_id, std::string problem_id, std::string raw_text,
                           std::optional<std::string> final_answer = std::nullopt);

std::vector<std::string> split_steps(std::string_view raw_text);
std::string join_steps(const std::vector<std::string>& steps);

struct RubricCriterion {
  int index = 0;  // 1-based
  std::string text;

  bool operator==(const RubricCriterion&) const = default;
};

/// Minimum whitespace-separated words a criterion must carry.
inline constexpr std::size_t kMinCriterionWords = 3;

struct RubricSet {
  std::string problem_id;
  std::vector<RubricCriterion> criteria;
  std::vector<std::string> source_trajectory_ids;
  std::string created_at;  // ISO-8601 UTC

  bool operator==(const RubricSet&) const = default;
};

struct RewardRecord {
  std::string trajectory_id;
  double answer_reward = 0.0;
  std::optional<double> rubric_reward;
  std::vector<bool> verdicts;
  double combined_reward = 0.0;
  double lambda_used = 0.5;

  bool operator==(const RewardRecord&) const = default;
};

struct AdvantageGroup {
  std::string problem_id;
  std::vector<double> rewards;
  std::vector<double> advantages;
  bool degenerate = false;
  // Ids of the trajectories the rewards belong to, in the same order. Empty
  // when the group was built from bare rewards.
  std::vector<std::string> trajectory_ids;

  bool operator==(const AdvantageGroup&) const = default;
};

std::size_t count_words(std::string_view text);

const ProblemInstance& validate(const ProblemInstance& problem);
const Trajectory& validate(const Trajectory& trajectory);
const RubricCriterion& validate(const RubricCriterion& criterion, std::size_t position);
const RubricSet& validate(const RubricSet& set, std::size_t min_source_trajectories = 1);
const AdvantageGroup& validate(const AdvantageGroup& group);

/// Returns the record iff every RewardRecord invariant holds.
const RewardRecord& validate_reward_record(const RewardRecord& record);

/// Rejects duplicate problem ids in a corpus.
void validate_corpus(const std::vector<ProblemInstance>& corpus);

// Canonical serialization. Field names match the type definitions exactly;
// absent optionals are written as null.
Json to_json(const ProblemInstance& v);
Json to_json(const Trajectory& v);
Json to_json(const RubricCriterion& v);
Json to_json(const RubricSet& v);
Json to_json(const RewardRecord& v);
Json to_json(const AdvantageGroup& v);

ProblemInstance problem_from_json(const Json& j);
Trajectory trajectory_from_json(const Json& j);
RubricSet rubric_set_from_json(const Json& j);
RewardRecord reward_record_from_json(const Json& j);
AdvantageGroup advantage_group_from_json(const Json& j);

/// Single-line dump used for every line-delimited file and HTTP body.
std::string dump_line(const Json& j);

}  // namespace autorubric
