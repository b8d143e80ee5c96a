#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autorubric/core/model.hpp"

namespace autorubric::sandbox {

enum class TemplateLabel { kFaithfulCorrect, kShortcutCorrect, kIncorrect };

std::string_view to_string(TemplateLabel label);

/// One enumerable trajectory a toy policy can emit for a task.
struct TrajectoryTemplate {
  std::string text;
  TemplateLabel label = TemplateLabel::kIncorrect;
  std::vector<bool> verdicts;  // ground truth against the task's criteria
  double initial_logit = 0.0;
};

struct SyntheticTask {
  std::string task_id;
  std::string question;
  std::string gold_answer;
  std::vector<std::string> criteria;
  std::vector<TrajectoryTemplate> trajectory_space;
};

inline constexpr std::size_t kMaxTemplatesPerTask = 64;

/// Checks the template-space invariants: at least one faithful and one
/// shortcut template, faithful ones satisfy every criterion, shortcut ones
/// miss at least one, and the space holds at most 64 templates.
void validate(const SyntheticTask& task);

struct TaskSuiteConfig {
  std::size_t n_tasks = 8;
  std::uint64_t seed = 1;
  double faithful_logit = 0.0;
  double shortcut_logit = 1.0;  // shortcuts start out likelier
  double incorrect_logit = 0.5;
};

/// Arithmetic tasks "(a + b) x c". Each has two faithful derivations, two
/// shortcuts that write a wrong intermediate and then jump to the right
/// answer, and two consistently wrong derivations.
std::vector<SyntheticTask> make_task_suite(const TaskSuiteConfig& cfg = {});

ProblemInstance task_problem(const SyntheticTask& task);
RubricSet task_rubrics(const SyntheticTask& task);
Trajectory template_trajectory(const SyntheticTask& task, std::size_t template_index, std::string trajectory_id);

/// Template length in whitespace tokens.
std::size_t template_length(const TrajectoryTemplate& t);

}  // namespace autorubric::sandbox
