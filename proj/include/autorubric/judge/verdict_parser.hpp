#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace autorubric::judge {

/// Judge output grammar for rubric scoring: one line "N: YES|NO" per
/// criterion (case-insensitive, optional "Criterion" prefix and markdown
/// emphasis), any other lines ignored. Throws UnparseableVerdict unless each
/// index 1..expected appears exactly once.
std::vector<bool> parse_verdicts(std::string_view text, std::size_t expected);

/// Holistic score: the last "x/y" fraction, else the last "score: x"; the
/// result is clamped to [0,1]. Throws UnparseableVerdict when neither appears.
double parse_holistic_score(std::string_view text);

/// Numbered list: a line starting "N." or "N)" opens a criterion, following
/// non-blank lines continue it, a blank line closes it. Text before the first
/// item and after a closed item is ignored. Whitespace is collapsed.
std::vector<std::string> parse_criteria_list(std::string_view text);

/// "Verdict: CONSISTENT|INCONSISTENT"; returns true for INCONSISTENT. The last
/// verdict line wins. Throws UnparseableVerdict when absent.
bool parse_inconsistency_verdict(std::string_view text);

}  // namespace autorubric::judge
