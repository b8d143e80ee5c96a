#include "autorubric/sandbox/tasks.hpp"

#include <algorithm>
#include <random>

namespace autorubric::sandbox {
namespace {

std::string num(long v) { return std::to_string(v); }

}  // namespace

std::string_view to_string(TemplateLabel label) {
  switch (label) {
    case TemplateLabel::kFaithfulCorrect: return "faithful_correct";
    case TemplateLabel::kShortcutCorrect: return "shortcut_correct";
    case TemplateLabel::kIncorrect: return "incorrect";
  }
  return "unknown";
}

void validate(const SyntheticTask& task) {
  if (task.trajectory_space.empty() || task.trajectory_space.size() > kMaxTemplatesPerTask) {
    throw InvariantViolation("task '" + task.task_id + "' must hold between 1 and 64 templates");
  }
  if (task.criteria.empty()) throw InvariantViolation("task '" + task.task_id + "' has no criteria");
  bool faithful = false;
  bool shortcut = false;
  for (const auto& t : task.trajectory_space) {
    if (t.verdicts.size() != task.criteria.size()) {
      throw InvariantViolation("template verdict count differs from criterion count in '" + task.task_id + "'");
    }
    const bool all = std::all_of(t.verdicts.begin(), t.verdicts.end(), [](bool v) { return v; });
    if (t.label == TemplateLabel::kFaithfulCorrect) {
      faithful = true;
      if (!all) throw InvariantViolation("faithful template fails a criterion in '" + task.task_id + "'");
    }
    if (t.label == TemplateLabel::kShortcutCorrect) {
      shortcut = true;
      if (all) throw InvariantViolation("shortcut template passes every criterion in '" + task.task_id + "'");
    }
  }
  if (!faithful || !shortcut) {
    throw InvariantViolation("task '" + task.task_id + "' needs faithful and shortcut templates");
  }
}

std::vector<SyntheticTask> make_task_suite(const TaskSuiteConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<long> operand(2, 19);
  std::uniform_int_distribution<long> factor(2, 9);

  std::vector<SyntheticTask> tasks;
  for (std::size_t n = 0; n < cfg.n_tasks; ++n) {
    long a = operand(rng);
    long b = operand(rng);
    long c = factor(rng);
    // The precedence-error answer must not be a digit prefix of the gold
    // answer, or "Final answer: 13" would read as part of "Final answer: 130".
    while (num((a + b) * c).rfind(num(a + b * c), 0) == 0) {
      a = operand(rng);
      b = operand(rng);
      c = factor(rng);
    }
    const long s = a + b;
    const long p = s * c;
    const long ac = a * c;
    const long bc = b * c;

    SyntheticTask task;
    task.task_id = "toy-" + num(static_cast<long>(n));
    task.question = "Compute (" + num(a) + " + " + num(b) + ") x " + num(c) + ".";
    task.gold_answer = num(p);
    task.criteria = {
        "Add " + num(a) + " and " + num(b) + " to get " + num(s) + ".",
        "Multiply " + num(s) + " by " + num(c) + " to get " + num(p) + ".",
        "Final answer: " + num(p),
    };

    const auto F = TemplateLabel::kFaithfulCorrect;
    const auto S = TemplateLabel::kShortcutCorrect;
    const auto I = TemplateLabel::kIncorrect;
    task.trajectory_space = {
        {task.criteria[0] + "\n" + task.criteria[1] + "\n" + "Final answer: " + num(p), F, {true, true, true},
         cfg.faithful_logit},
        {"The parentheses are evaluated before the product.\n" + task.criteria[0] + "\n" + task.criteria[1] +
             "\nCheck: " + num(p) + " divided by " + num(c) + " gives back " + num(s) + ".\nFinal answer: " + num(p),
         F, {true, true, true}, cfg.faithful_logit},
        {"Add " + num(a) + " and " + num(b) + " to get " + num(s + 1) + ".\nFinal answer: " + num(p), S,
         {false, false, true}, cfg.shortcut_logit},
        {"Multiply " + num(a) + " by " + num(c) + " to get " + num(ac) + ".\nFinal answer: " + num(p), S,
         {false, false, true}, cfg.shortcut_logit},
        {task.criteria[0] + "\nMultiply " + num(s) + " by " + num(c) + " to get " + num(p + 1) +
             ".\nFinal answer: " + num(p + 1),
         I, {true, false, false}, cfg.incorrect_logit},
        {"Multiply " + num(b) + " by " + num(c) + " to get " + num(bc) + ".\nAdd " + num(a) + " to that to get " +
             num(a + bc) + ".\nFinal answer: " + num(a + bc),
         I, {false, false, false}, cfg.incorrect_logit},
    };
    validate(task);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

ProblemInstance task_problem(const SyntheticTask& task) {
  ProblemInstance p;
  p.problem_id = task.task_id;
  p.question_text = task.question;
  p.gold_answer = task.gold_answer;
  p.answer_kind = AnswerKind::kFreeForm;
  return p;
}

RubricSet task_rubrics(const SyntheticTask& task) {
  RubricSet set;
  set.problem_id = task.task_id;
  for (std::size_t i = 0; i < task.criteria.size(); ++i) {
    set.criteria.push_back({static_cast<int>(i) + 1, task.criteria[i]});
  }
  for (std::size_t k = 0; k < task.trajectory_space.size(); ++k) {
    if (task.trajectory_space[k].label != TemplateLabel::kIncorrect) {
      set.source_trajectory_ids.push_back(task.task_id + "/t" + std::to_string(k));
    }
  }
  set.created_at = "1970-01-01T00:00:00Z";
  return set;
}

Trajectory template_trajectory(const SyntheticTask& task, std::size_t template_index, std::string trajectory_id) {
  return make_trajectory(std::move(trajectory_id), task.task_id, task.trajectory_space.at(template_index).text);
}

std::size_t template_length(const TrajectoryTemplate& t) { return count_words(t.text); }

}  // namespace autorubric::sandbox
