#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "autorubric/core/model.hpp"
#include "autorubric/forge/aggregation.hpp"
#include "autorubric/judge/mock_judge.hpp"
#include "autorubric/service/reward_service.hpp"

namespace fixtures {

using namespace autorubric;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("autorubric-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Planted ground truth for one synthetic problem.
struct PlantedProblem {
  std::string problem_id;
  int correct = 0;                 // correct rollouts out of 8
  std::vector<std::string> steps;  // steps every correct rollout shares
  std::vector<std::size_t> step_words;
};

struct GatingCorpus {
  std::vector<ProblemInstance> corpus;
  std::vector<Trajectory> rollouts;
  std::vector<PlantedProblem> planted;
};

/// Multiple-choice problems with 8 rollouts each. Correct rollouts share the
/// same 1-4 steps of known word count and answer "(B)"; incorrect rollouts
/// answer "(C)" through unrelated steps. The answer line itself has two words,
/// so it never qualifies as a criterion.
inline GatingCorpus make_gating_corpus(std::size_t n_problems, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GatingCorpus out;
  for (std::size_t i = 0; i < n_problems; ++i) {
    PlantedProblem p;
    p.problem_id = "p" + std::to_string(1000 + i);
    p.correct = static_cast<int>(rng() % 9);
    const std::size_t n_steps = 1 + rng() % 4;
    for (std::size_t j = 0; j < n_steps; ++j) {
      const std::size_t extra = rng() % 12;
      std::string text = "Checkpoint " + std::to_string(j + 1) + " for " + p.problem_id;
      for (std::size_t w = 0; w < extra; ++w) text += " w" + std::to_string(w);
      p.steps.push_back(text);
      p.step_words.push_back(4 + extra);
    }
    ProblemInstance problem{p.problem_id, "Which option holds for " + p.problem_id + "?", "", "B",
                            AnswerKind::kMultipleChoice};
    out.corpus.push_back(problem);
    for (int r = 0; r < 8; ++r) {
      const std::string tid = p.problem_id + "-r" + std::to_string(r);
      std::string raw;
      if (r < p.correct) {
        for (const auto& s : p.steps) raw += s + "\n";
        raw += "Answer: (B)";
      } else {
        raw = "Guessing without a derivation here " + std::to_string(r) + "\nAnswer: (C)";
      }
      out.rollouts.push_back(make_trajectory(tid, p.problem_id, raw));
    }
    out.planted.push_back(std::move(p));
  }
  return out;
}

/// Statistics computed from the planted parameters alone.
inline forge::RubricCorpusStats expected_stats(const GatingCorpus& c, int min_correct) {
  forge::RubricCorpusStats s;
  s.n_problems = c.planted.size();
  std::size_t criteria = 0;
  for (const auto& p : c.planted) {
    if (p.correct < min_correct) continue;
    ++s.n_rubric_sets;
    for (auto w : p.step_words) {
      s.total_words += w;
      s.max_words_per_criterion = std::max(s.max_words_per_criterion, w);
      ++criteria;
    }
  }
  if (s.n_problems) s.coverage = static_cast<double>(s.n_rubric_sets) / static_cast<double>(s.n_problems);
  if (s.n_rubric_sets) {
    s.avg_criteria = static_cast<double>(criteria) / static_cast<double>(s.n_rubric_sets);
    s.avg_words_per_set = static_cast<double>(s.total_words) / static_cast<double>(s.n_rubric_sets);
  }
  if (criteria) s.avg_words_per_criterion = static_cast<double>(s.total_words) / static_cast<double>(criteria);
  return s;
}

/// Mock rules for service tests: table verdicts with per-problem rows, plus
/// failure markers that make single items fail.
inline judge::MockRules service_mock_rules() {
  judge::MockRules rules;
  rules.verdict_mode = judge::MockRules::VerdictMode::kStepMatch;
  rules.unavailable_marker = "[[judge-down]]";
  rules.garbled_marker = "[[garbled]]";
  return rules;
}

/// Random score batch over the given problems. Items draw their text from
/// the problem's rubric steps (so verdicts vary), an answer line that is
/// right or wrong, and occasionally a failure marker.
inline service::ScoreBatchRequest random_batch(const std::vector<ProblemInstance>& corpus,
                                               const std::vector<RubricSet>& rubrics, std::size_t n,
                                               std::uint64_t seed, double failure_rate = 0.02) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  service::ScoreBatchRequest req;
  req.group_by_problem = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& problem = corpus[rng() % corpus.size()];
    std::string raw;
    for (const auto& set : rubrics) {
      if (set.problem_id != problem.problem_id) continue;
      for (const auto& c : set.criteria) {
        if (u(rng) < 0.5) raw += c.text + "\n";
      }
    }
    if (u(rng) < failure_rate) raw += (u(rng) < 0.5 ? "[[judge-down]]" : "[[garbled]]") + std::string("\n");
    raw += u(rng) < 0.6 ? "Answer: (" + problem.gold_answer + ")" : "Answer: (Z)";
    req.items.push_back({problem.problem_id, raw, "t" + std::to_string(i)});
  }
  return req;
}

}  // namespace fixtures
