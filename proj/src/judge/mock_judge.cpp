#include "autorubric/judge/mock_judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "autorubric/core/jsonl.hpp"
#include "autorubric/judge/gateway.hpp"
#include "autorubric/judge/http_transport.hpp"
#include "autorubric/judge/verdict_parser.hpp"

namespace autorubric::judge {
namespace {

std::string normalize_step(std::string_view s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(c));
  }
  while (!out.empty() && std::string_view(".,;:!?").find(out.back()) != std::string_view::npos) out.pop_back();
  return out;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

MockRules::VerdictMode parse_verdict_mode(std::string_view text) {
  if (text == "table") return MockRules::VerdictMode::kTable;
  if (text == "all_true") return MockRules::VerdictMode::kAllTrue;
  if (text == "all_false") return MockRules::VerdictMode::kAllFalse;
  if (text == "step_match") return MockRules::VerdictMode::kStepMatch;
  throw ParseError("unknown verdict_mode '" + std::string(text) + "'");
}

MockRules mock_rules_from_json(const Json& j) {
  MockRules r;
  try {
    if (j.contains("verdict_mode")) r.verdict_mode = parse_verdict_mode(j.at("verdict_mode").get<std::string>());
    if (j.contains("default_verdict")) r.default_verdict = j.at("default_verdict").get<bool>();
    if (j.contains("verdict_table")) {
      for (const auto& [pid, row] : j.at("verdict_table").items()) {
        for (const auto& [index, verdict] : row.items()) r.verdict_table[pid][std::stoi(index)] = verdict.get<bool>();
      }
    }
    if (j.contains("verdict_count_override")) {
      r.verdict_count_override = j.at("verdict_count_override").get<std::map<std::string, int>>();
    }
    if (j.contains("holistic_scores")) r.holistic_scores = j.at("holistic_scores").get<std::map<std::string, double>>();
    if (j.contains("default_holistic")) r.default_holistic = j.at("default_holistic").get<double>();
    if (j.contains("rubrics")) r.rubrics = j.at("rubrics").get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("inconsistent_trajectory_ids")) {
      r.inconsistent_trajectory_ids = j.at("inconsistent_trajectory_ids").get<std::set<std::string>>();
    }
    if (j.contains("inconsistent_texts")) r.inconsistent_texts = j.at("inconsistent_texts").get<std::set<std::string>>();
    if (j.contains("unavailable_marker")) r.unavailable_marker = j.at("unavailable_marker").get<std::string>();
    if (j.contains("garbled_marker")) r.garbled_marker = j.at("garbled_marker").get<std::string>();
    if (j.contains("reachable")) r.reachable = j.at("reachable").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("mock judge config: ") + e.what());
  }
  return r;
}

std::vector<std::string> shared_steps(std::span<const Trajectory> trajectories) {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> support;
  std::map<std::string, std::string> original;
  for (const auto& t : trajectories) {
    std::set<std::string> seen_here;
    for (const auto& step : t.steps) {
      if (count_words(step) < kMinCriterionWords) continue;
      const std::string key = normalize_step(step);
      if (!seen_here.insert(key).second) continue;
      if (support[key]++ == 0) {
        order.push_back(key);
        const auto first = step.find_first_not_of(" \t");
        const auto last = step.find_last_not_of(" \t");
        original[key] = step.substr(first, last - first + 1);
      }
    }
  }
  std::vector<std::string> out;
  for (const auto& key : order) {
    if (2 * support[key] >= trajectories.size()) out.push_back(original[key]);
  }
  return out;
}

MockJudge::MockJudge(MockRules rules) : rules_(std::move(rules)) {}

void MockJudge::check_failure_markers(const Trajectory& trajectory) const {
  if (!rules_.unavailable_marker.empty() && trajectory.raw_text.find(rules_.unavailable_marker) != std::string::npos) {
    throw JudgeUnavailable("mock judge: unavailable for trajectory '" + trajectory.trajectory_id + "'");
  }
}

JudgeVerdicts MockJudge::score_against_rubrics(const Trajectory& trajectory, const RubricSet& rubrics) {
  ++calls_;
  if (rubrics.criteria.empty()) throw InvariantViolation("rubric set has no criteria");
  check_failure_markers(trajectory);

  std::size_t lines = rubrics.criteria.size();
  if (auto it = rules_.verdict_count_override.find(rubrics.problem_id); it != rules_.verdict_count_override.end()) {
    lines = static_cast<std::size_t>(std::max(0, it->second));
  }
  std::vector<std::string> steps;
  for (const auto& s : trajectory.steps) {
    if (count_words(s) >= kMinCriterionWords) steps.push_back(normalize_step(s));
  }

  std::string reply;
  std::size_t satisfied = 0;
  for (std::size_t i = 0; i < lines; ++i) {
    const int index = static_cast<int>(i) + 1;
    bool verdict = rules_.default_verdict;
    switch (rules_.verdict_mode) {
      case MockRules::VerdictMode::kAllTrue: verdict = true; break;
      case MockRules::VerdictMode::kAllFalse: verdict = false; break;
      case MockRules::VerdictMode::kTable: {
        auto row = rules_.verdict_table.find(rubrics.problem_id);
        if (row != rules_.verdict_table.end()) {
          auto cell = row->second.find(index);
          if (cell != row->second.end()) verdict = cell->second;
        }
        break;
      }
      case MockRules::VerdictMode::kStepMatch: {
        verdict = false;
        if (i < rubrics.criteria.size()) {
          const std::string criterion = normalize_step(rubrics.criteria[i].text);
          verdict = std::any_of(steps.begin(), steps.end(),
                                [&](const std::string& s) { return criterion.find(s) != std::string::npos; });
        }
        break;
      }
    }
    satisfied += verdict ? 1 : 0;
    reply += std::to_string(index) + ": " + (verdict ? "YES" : "NO") + "\n";
  }
  reply += "Total: " + std::to_string(satisfied) + "/" + std::to_string(lines);

  if (!rules_.garbled_marker.empty() && trajectory.raw_text.find(rules_.garbled_marker) != std::string::npos) {
    reply = "I am not able to evaluate this solution.";
  }
  JudgeVerdicts out;
  out.verdicts = parse_verdicts(reply, rubrics.criteria.size());
  out.raw_response = std::move(reply);
  return out;
}

double MockJudge::holistic_score(const Trajectory& trajectory) {
  ++calls_;
  if (trajectory.raw_text.empty()) throw InvariantViolation("trajectory is empty");
  check_failure_markers(trajectory);
  std::string reply = "I cannot score this.";
  if (auto it = rules_.holistic_scores.find(trajectory.problem_id); it != rules_.holistic_scores.end()) {
    reply = "Score: " + format_double(it->second);
  } else if (rules_.default_holistic) {
    reply = "Score: " + format_double(*rules_.default_holistic);
  }
  if (!rules_.garbled_marker.empty() && trajectory.raw_text.find(rules_.garbled_marker) != std::string::npos) {
    reply = "I am not able to evaluate this solution.";
  }
  return parse_holistic_score(reply);
}

std::string MockJudge::compose_rubrics(const ProblemInstance& problem, std::span<const Trajectory> correct,
                                       int max_criteria) {
  ++calls_;
  ++compose_calls_;
  for (const auto& t : correct) check_failure_markers(t);
  std::vector<std::string> criteria;
  if (auto it = rules_.rubrics.find(problem.problem_id); it != rules_.rubrics.end()) {
    criteria = it->second;
  } else {
    criteria = shared_steps(correct);
    if (max_criteria >= 0 && criteria.size() > static_cast<std::size_t>(max_criteria)) criteria.resize(max_criteria);
  }
  if (criteria.empty()) return "The solutions share no common checkpoints.";
  std::string reply = "Shared checkpoints:\n";
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    reply += std::to_string(i + 1) + ". " + criteria[i] + "\n";
  }
  return reply;
}

bool MockJudge::flags_inconsistent(const Trajectory& trajectory) {
  ++calls_;
  check_failure_markers(trajectory);
  const bool flagged = rules_.inconsistent_trajectory_ids.count(trajectory.trajectory_id) != 0 ||
                       rules_.inconsistent_texts.count(trajectory.raw_text) != 0;
  std::string reply = flagged ? "Verdict: INCONSISTENT" : "Verdict: CONSISTENT";
  if (!rules_.garbled_marker.empty() && trajectory.raw_text.find(rules_.garbled_marker) != std::string::npos) {
    reply = "Hard to say.";
  }
  return parse_inconsistency_verdict(reply);
}

JudgeEndpointConfig endpoint_config_from_json(const Json& j) {
  JudgeEndpointConfig cfg;
  try {
    if (j.contains("base_url")) cfg.base_url = j.at("base_url").get<std::string>();
    if (j.contains("api_key_env")) cfg.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("model_name")) cfg.model_name = j.at("model_name").get<std::string>();
    if (j.contains("timeout_ms")) cfg.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
    if (j.contains("max_retries")) cfg.max_retries = j.at("max_retries").get<int>();
    if (j.contains("max_concurrency")) cfg.max_concurrency = j.at("max_concurrency").get<int>();
    if (j.contains("retry_backoff_ms")) cfg.retry_backoff = std::chrono::milliseconds(j.at("retry_backoff_ms").get<long>());
    if (j.contains("max_output_tokens")) cfg.max_output_tokens = j.at("max_output_tokens").get<int>();
    if (j.contains("construction_temperature")) cfg.construction_temperature = j.at("construction_temperature").get<double>();
    if (j.contains("templates_dir")) cfg.templates_dir = j.at("templates_dir").get<std::string>();
    if (j.contains("cache_dir")) cfg.cache_dir = j.at("cache_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("judge endpoint config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::shared_ptr<Judge> make_judge(const Json& config) {
  const std::string kind = config.value("kind", std::string("mock"));
  if (kind == "mock") return std::make_shared<MockJudge>(mock_rules_from_json(config));
  if (kind == "openai") {
    auto cfg = endpoint_config_from_json(config);
    auto templates = cfg.templates_dir ? TemplateStore::from_directory(*cfg.templates_dir) : TemplateStore::defaults();
    auto transport = std::make_shared<HttpChatTransport>(cfg);
    return std::make_shared<GatewayJudge>(std::move(cfg), std::move(transport), std::move(templates));
  }
  throw ParseError("unknown judge kind '" + kind + "'");
}

std::shared_ptr<Judge> make_judge_from_file(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return make_judge(j);
}

}  // namespace autorubric::judge
