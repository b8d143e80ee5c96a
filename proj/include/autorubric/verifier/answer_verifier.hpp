#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "autorubric/core/model.hpp"

namespace autorubric::verifier {

/// Rule-based outcome checking. The option-letter pattern's last non-empty
/// capture group (or the whole match when it has none) is the letter. The
/// default skips "I"/"A" used as a pronoun or article ("I am", "A triangle").
struct VerifierConfig {
  std::string choice_pattern = R"(\(([A-Z])\)|\b([B-HJ-Z])\b|\b([AI])\b(?!\s+[a-z]))";
  std::string answer_marker_pattern = R"(final answer\s*(?:is)?\s*:?|the answer is\s*:?|answer\s*:|\\boxed\{)";
  double numeric_tolerance = 1e-6;  // relative
  bool case_sensitive = false;
};

void validate(const VerifierConfig& cfg);

VerifierConfig verifier_config_from_json(const Json& j);
Json to_json(const VerifierConfig& cfg);

/// Multiple choice: last option letter after the last answer marker, or the
/// last letter in the whole text when no marker exists. Free form: the span
/// after the last marker up to the end of its line. nullopt means no answer
/// was found; callers score that as r_ans = 0.
std::optional<std::string> extract_final_answer(const Trajectory& trajectory, AnswerKind kind,
                                                const VerifierConfig& cfg = {});

std::optional<std::string> extract_final_answer(std::string_view raw_text, AnswerKind kind,
                                                const VerifierConfig& cfg = {});

/// Returns exactly 1.0 on a match and 0.0 otherwise. Total.
double verify(const std::optional<std::string>& predicted, std::string_view gold, AnswerKind kind,
              const VerifierConfig& cfg = {});

/// Free-form normalization: trim, lowercase unless case-sensitive, strip
/// trailing punctuation, collapse whitespace, drop a leading "$", and drop
/// trailing units when a number leads.
std::string normalize_free_form(std::string_view text, bool case_sensitive);

/// Parses a normalized free-form answer as a number, accepting thousands
/// separators. nullopt if any non-numeric text remains.
std::optional<double> parse_number(std::string_view text);

}  // namespace autorubric::verifier
