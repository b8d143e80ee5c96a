#include "autorubric/judge/verdict_parser.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <regex>
#include <sstream>

#include "autorubric/core/errors.hpp"

namespace autorubric::judge {
namespace {

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

std::string strip_emphasis(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '*' || c == '`'; }), s.end());
  return s;
}

std::string collapse(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::string excerpt(std::string_view text) {
  constexpr std::size_t kMax = 120;
  std::string s = collapse(text.substr(0, kMax));
  if (text.size() > kMax) s += "...";
  return s;
}

}  // namespace

std::vector<bool> parse_verdicts(std::string_view text, std::size_t expected) {
  static const std::regex kLine(R"(^\s*(?:criterion|checkpoint)?\s*#?(\d+)\s*[:.)\-]\s*(yes|no)\b)",
                                std::regex::ECMAScript | std::regex::icase);
  std::vector<std::optional<bool>> slots(expected);
  std::size_t seen = 0;
  for (const auto& raw : lines_of(text)) {
    const std::string line = strip_emphasis(raw);
    std::smatch m;
    if (!std::regex_search(line, m, kLine)) continue;
    const long index = std::strtol(m.str(1).c_str(), nullptr, 10);
    if (index < 1 || static_cast<std::size_t>(index) > expected) {
      throw UnparseableVerdict("verdict index " + std::to_string(index) + " outside 1.." + std::to_string(expected));
    }
    const bool yes = std::tolower(static_cast<unsigned char>(m.str(2)[0])) == 'y';
    auto& slot = slots[static_cast<std::size_t>(index - 1)];
    if (slot) throw UnparseableVerdict("duplicate verdict for criterion " + std::to_string(index));
    slot = yes;
    ++seen;
  }
  if (seen != expected) {
    throw UnparseableVerdict("expected " + std::to_string(expected) + " verdicts, found " + std::to_string(seen) +
                             " in: " + excerpt(text));
  }
  std::vector<bool> out;
  out.reserve(expected);
  for (const auto& s : slots) out.push_back(*s);
  return out;
}

double parse_holistic_score(std::string_view text) {
  static const std::regex kFraction(R"((\d+(?:\.\d+)?)\s*/\s*(\d+(?:\.\d+)?))");
  static const std::regex kScore(R"(score\s*[:=]\s*(-?\d+(?:\.\d+)?))", std::regex::ECMAScript | std::regex::icase);
  const std::string s(text);
  std::optional<double> value;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kFraction); it != std::sregex_iterator(); ++it) {
    const double den = std::strtod((*it)[2].str().c_str(), nullptr);
    if (den > 0.0) value = std::strtod((*it)[1].str().c_str(), nullptr) / den;
  }
  if (!value) {
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kScore); it != std::sregex_iterator(); ++it) {
      value = std::strtod((*it)[1].str().c_str(), nullptr);
    }
  }
  if (!value) throw UnparseableVerdict("no score found in: " + excerpt(text));
  return std::clamp(*value, 0.0, 1.0);
}

std::vector<std::string> parse_criteria_list(std::string_view text) {
  static const std::regex kItem(R"(^\s*(?:[-*]\s*)?\**\s*(\d+)\s*[.)]\**\s+(.*)$)");
  std::vector<std::string> items;
  bool open = false;
  for (const auto& line : lines_of(text)) {
    std::smatch m;
    if (std::regex_match(line, m, kItem)) {
      items.push_back(m.str(2));
      open = true;
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      open = false;
      continue;
    }
    if (open) items.back() += " " + line;
  }
  for (auto& item : items) item = collapse(strip_emphasis(item));
  return items;
}

bool parse_inconsistency_verdict(std::string_view text) {
  static const std::regex kVerdict(R"(verdict\s*:\s*\**\s*(inconsistent|consistent))",
                                   std::regex::ECMAScript | std::regex::icase);
  const std::string s(text);
  std::optional<bool> flagged;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kVerdict); it != std::sregex_iterator(); ++it) {
    flagged = std::tolower(static_cast<unsigned char>((*it)[1].str()[0])) == 'i';
  }
  if (!flagged) throw UnparseableVerdict("no consistency verdict in: " + excerpt(text));
  return *flagged;
}

}  // namespace autorubric::judge
