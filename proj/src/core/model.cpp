#include "autorubric/core/model.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace autorubric {
namespace {

constexpr double kRewardTolerance = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

void require_finite(double v, const char* field) {
  require(std::isfinite(v), std::string(field) + " must be finite");
}

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.is_object()) throw ParseError("expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + name + "': " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* name) {
  if (!j.is_object()) throw ParseError("expected an object");
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + name + "': " + e.what());
  }
}

Json optional_to_json(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_to_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string_view to_string(AnswerKind kind) {
  return kind == AnswerKind::kMultipleChoice ? "multiple_choice" : "free_form";
}

AnswerKind parse_answer_kind(std::string_view text) {
  if (text == "multiple_choice") return AnswerKind::kMultipleChoice;
  if (text == "free_form") return AnswerKind::kFreeForm;
  throw ParseError("unknown answer_kind '" + std::string(text) + "'");
}

std::vector<std::string> split_steps(std::string_view raw_text) {
  std::vector<std::string> steps;
  if (raw_text.empty()) return steps;
  std::size_t start = 0;
  while (true) {
    auto pos = raw_text.find(kStepSeparator, start);
    if (pos == std::string_view::npos) {
      steps.emplace_back(raw_text.substr(start));
      break;
    }
    steps.emplace_back(raw_text.substr(start, pos - start));
    start = pos + kStepSeparator.size();
  }
  return steps;
}

std::string join_steps(const std::vector<std::string>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += kStepSeparator;
    out += steps[i];
  }
  return out;
}

Trajectory make_trajectory(std::string trajectory_id, std::string problem_id, std::string raw_text,
                           std::optional<std::string> final_answer) {
  Trajectory t;
  t.trajectory_id = std::move(trajectory_id);
  t.problem_id = std::move(problem_id);
  t.steps = split_steps(raw_text);
  t.raw_text = std::move(raw_text);
  t.final_answer = std::move(final_answer);
  return t;
}

std::size_t count_words(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

const ProblemInstance& validate(const ProblemInstance& p) {
  require(!p.problem_id.empty(), "problem_id must be non-empty");
  require(!p.gold_answer.empty(), "gold_answer must be non-empty");
  if (p.answer_kind == AnswerKind::kMultipleChoice) {
    require(p.gold_answer.size() == 1 && p.gold_answer[0] >= 'A' && p.gold_answer[0] <= 'Z',
            "multiple_choice gold_answer must be a single letter A-Z");
  }
  return p;
}

void validate_corpus(const std::vector<ProblemInstance>& corpus) {
  std::unordered_set<std::string> seen;
  for (const auto& p : corpus) {
    validate(p);
    require(seen.insert(p.problem_id).second, "duplicate problem_id '" + p.problem_id + "'");
  }
}

const Trajectory& validate(const Trajectory& t) {
  require(!t.trajectory_id.empty(), "trajectory_id must be non-empty");
  require(t.raw_text.empty() || !t.steps.empty(), "steps must be non-empty when raw_text is non-empty");
  require(join_steps(t.steps) == t.raw_text, "steps must reconstruct raw_text");
  return t;
}

const RubricCriterion& validate(const RubricCriterion& c, std::size_t position) {
  require(c.index >= 1 && static_cast<std::size_t>(c.index) == position,
          "criterion index must equal its 1-based position");
  require(!c.text.empty(), "criterion text must be non-empty");
  require(count_words(c.text) >= kMinCriterionWords,
          "criterion " + std::to_string(c.index) + " has fewer than 3 words");
  return c;
}

const RubricSet& validate(const RubricSet& s, std::size_t min_source_trajectories) {
  require(!s.problem_id.empty(), "problem_id must be non-empty");
  require(!s.criteria.empty(), "criteria must contain at least one criterion");
  for (std::size_t i = 0; i < s.criteria.size(); ++i) validate(s.criteria[i], i + 1);
  require(s.source_trajectory_ids.size() >= min_source_trajectories,
          "source_trajectory_ids below the minimum correct count");
  return s;
}

const RewardRecord& validate_reward_record(const RewardRecord& r) {
  require_finite(r.answer_reward, "answer_reward");
  require_finite(r.combined_reward, "combined_reward");
  require_finite(r.lambda_used, "lambda_used");
  require(r.answer_reward == 0.0 || r.answer_reward == 1.0, "answer_reward must be 0 or 1");
  require(r.lambda_used >= 0.0 && r.lambda_used <= 1.0, "lambda_used must lie in [0,1]");
  require(r.combined_reward >= 0.0 && r.combined_reward <= 1.0, "combined_reward must lie in [0,1]");
  if (r.rubric_reward) {
    const double rubric = *r.rubric_reward;
    require_finite(rubric, "rubric_reward");
    require(rubric >= 0.0 && rubric <= 1.0, "rubric_reward must lie in [0,1]");
    require(!r.verdicts.empty(), "rubric_reward present requires verdicts");
    std::size_t hits = 0;
    for (bool v : r.verdicts) hits += v ? 1 : 0;
    const double fraction = static_cast<double>(hits) / static_cast<double>(r.verdicts.size());
    require(std::abs(rubric - fraction) <= kRewardTolerance,
            "rubric_reward must equal the fraction of true verdicts");
    const double expected = r.lambda_used * r.answer_reward + (1.0 - r.lambda_used) * rubric;
    require(std::abs(r.combined_reward - expected) <= kRewardTolerance,
            "combined_reward must equal lambda*answer_reward + (1-lambda)*rubric_reward");
  } else {
    require(r.verdicts.empty(), "verdicts must be empty when rubric_reward is absent");
    require(r.combined_reward == r.answer_reward, "combined_reward must equal answer_reward without a rubric");
  }
  return r;
}

const AdvantageGroup& validate(const AdvantageGroup& g) {
  require(g.rewards.size() >= 2, "group must hold at least 2 rewards");
  require(g.rewards.size() == g.advantages.size(), "rewards and advantages must have equal length");
  require(g.trajectory_ids.empty() || g.trajectory_ids.size() == g.rewards.size(),
          "trajectory_ids must match the group size");
  for (double v : g.rewards) require_finite(v, "rewards");
  for (double v : g.advantages) require_finite(v, "advantages");
  const double n = static_cast<double>(g.advantages.size());
  if (g.degenerate) {
    for (double a : g.advantages) require(a == 0.0, "degenerate group advantages must be exactly 0");
  } else {
    double mean = 0.0;
    for (double a : g.advantages) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : g.advantages) var += (a - mean) * (a - mean);
    var /= n;
    require(std::abs(mean) <= 1e-9, "advantages must have mean 0");
    require(std::abs(std::sqrt(var) - 1.0) <= 1e-9, "advantages must have population std 1");
  }
  return g;
}

Json to_json(const ProblemInstance& v) {
  Json j;
  j["problem_id"] = v.problem_id;
  j["question_text"] = v.question_text;
  j["visual_ref"] = v.visual_ref;
  j["gold_answer"] = v.gold_answer;
  j["answer_kind"] = std::string(to_string(v.answer_kind));
  return j;
}

Json to_json(const Trajectory& v) {
  Json j;
  j["trajectory_id"] = v.trajectory_id;
  j["problem_id"] = v.problem_id;
  j["steps"] = v.steps;
  j["raw_text"] = v.raw_text;
  j["final_answer"] = optional_to_json(v.final_answer);
  return j;
}

Json to_json(const RubricCriterion& v) {
  Json j;
  j["index"] = v.index;
  j["text"] = v.text;
  return j;
}

Json to_json(const RubricSet& v) {
  Json j;
  j["problem_id"] = v.problem_id;
  Json criteria = Json::array();
  for (const auto& c : v.criteria) criteria.push_back(to_json(c));
  j["criteria"] = std::move(criteria);
  j["source_trajectory_ids"] = v.source_trajectory_ids;
  j["created_at"] = v.created_at;
  return j;
}

Json to_json(const RewardRecord& v) {
  Json j;
  j["trajectory_id"] = v.trajectory_id;
  j["answer_reward"] = v.answer_reward;
  j["rubric_reward"] = optional_to_json(v.rubric_reward);
  j["verdicts"] = v.verdicts;
  j["combined_reward"] = v.combined_reward;
  j["lambda_used"] = v.lambda_used;
  return j;
}

Json to_json(const AdvantageGroup& v) {
  Json j;
  j["problem_id"] = v.problem_id;
  j["rewards"] = v.rewards;
  j["advantages"] = v.advantages;
  j["degenerate"] = v.degenerate;
  j["trajectory_ids"] = v.trajectory_ids;
  return j;
}

ProblemInstance problem_from_json(const Json& j) {
  ProblemInstance p;
  p.problem_id = field<std::string>(j, "problem_id");
  p.question_text = field<std::string>(j, "question_text");
  p.visual_ref = optional_field<std::string>(j, "visual_ref").value_or("");
  p.gold_answer = field<std::string>(j, "gold_answer");
  p.answer_kind = parse_answer_kind(field<std::string>(j, "answer_kind"));
  validate(p);
  return p;
}

Trajectory trajectory_from_json(const Json& j) {
  Trajectory t;
  t.trajectory_id = field<std::string>(j, "trajectory_id");
  t.problem_id = field<std::string>(j, "problem_id");
  t.raw_text = field<std::string>(j, "raw_text");
  // Rollout files produced by other tools may omit steps; derive them.
  auto steps = optional_field<std::vector<std::string>>(j, "steps");
  t.steps = steps ? std::move(*steps) : split_steps(t.raw_text);
  t.final_answer = optional_field<std::string>(j, "final_answer");
  validate(t);
  return t;
}

RubricSet rubric_set_from_json(const Json& j) {
  RubricSet s;
  s.problem_id = field<std::string>(j, "problem_id");
  const auto criteria = field<Json>(j, "criteria");
  if (!criteria.is_array()) throw ParseError("field 'criteria' must be an array");
  for (const auto& c : criteria) {
    s.criteria.push_back({field<int>(c, "index"), field<std::string>(c, "text")});
  }
  s.source_trajectory_ids = field<std::vector<std::string>>(j, "source_trajectory_ids");
  s.created_at = field<std::string>(j, "created_at");
  validate(s);
  return s;
}

RewardRecord reward_record_from_json(const Json& j) {
  RewardRecord r;
  r.trajectory_id = field<std::string>(j, "trajectory_id");
  r.answer_reward = field<double>(j, "answer_reward");
  r.rubric_reward = optional_field<double>(j, "rubric_reward");
  r.verdicts = field<std::vector<bool>>(j, "verdicts");
  r.combined_reward = field<double>(j, "combined_reward");
  r.lambda_used = field<double>(j, "lambda_used");
  validate_reward_record(r);
  return r;
}

AdvantageGroup advantage_group_from_json(const Json& j) {
  AdvantageGroup g;
  g.problem_id = field<std::string>(j, "problem_id");
  g.rewards = field<std::vector<double>>(j, "rewards");
  g.advantages = field<std::vector<double>>(j, "advantages");
  g.degenerate = field<bool>(j, "degenerate");
  g.trajectory_ids = optional_field<std::vector<std::string>>(j, "trajectory_ids").value_or(std::vector<std::string>{});
  validate(g);
  return g;
}

std::string dump_line(const Json& j) {
  // Replace invalid UTF-8 rather than throwing halfway through a file.
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace autorubric
