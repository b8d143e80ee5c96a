#include "autorubric/verifier/answer_verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <unordered_map>

namespace autorubric::verifier {
namespace {

// std::regex construction dominates per-call cost; keep compiled patterns.
const std::regex& compiled(const std::string& pattern, std::regex::flag_type flags) {
  thread_local std::unordered_map<std::string, std::regex> cache;
  const std::string key = std::to_string(static_cast<unsigned>(flags)) + ':' + pattern;
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::regex(pattern, flags)).first;
  return it->second;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

bool is_trailing_punct(char c) {
  static constexpr std::string_view kPunct = ".,;:!?$*";
  return kPunct.find(c) != std::string_view::npos;
}

// Position just past the last answer marker, or npos. A "\boxed{" marker also
// reports where its matching brace closes.
struct MarkerHit {
  std::size_t begin = std::string::npos;
  std::size_t end = std::string::npos;
};

MarkerHit find_last_marker(const std::string& text, const VerifierConfig& cfg) {
  const std::regex& marker = compiled(cfg.answer_marker_pattern, std::regex::ECMAScript | std::regex::icase);
  MarkerHit hit;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), marker); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position(0) + it->length(0));
    hit.begin = pos;
    hit.end = std::string::npos;
    const std::string matched = it->str(0);
    if (!matched.empty() && matched.back() == '{') {
      int depth = 1;
      for (std::size_t i = pos; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}' && --depth == 0) {
          hit.end = i;
          break;
        }
      }
    }
  }
  return hit;
}

std::optional<std::string> last_choice(const std::string& text, const VerifierConfig& cfg) {
  const std::regex& choice = compiled(cfg.choice_pattern, std::regex::ECMAScript);
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), choice); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::string letter = m.str(0);
    for (std::size_t g = m.size(); g-- > 1;) {
      if (m[g].matched && m[g].length() > 0) {
        letter = m.str(g);
        break;
      }
    }
    last = std::move(letter);
  }
  return last;
}

std::string normalize_choice(std::string_view s, bool case_sensitive) {
  s = trim(s);
  while (!s.empty() && (s.front() == '(' || s.front() == '[')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ')' || s.back() == ']' || is_trailing_punct(s.back()))) s.remove_suffix(1);
  std::string out(trim(s));
  if (!case_sensitive) {
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  }
  return out;
}

}  // namespace

void validate(const VerifierConfig& cfg) {
  if (!(cfg.numeric_tolerance > 0.0) || !std::isfinite(cfg.numeric_tolerance)) {
    throw InvariantViolation("numeric_tolerance must be positive");
  }
  try {
    std::regex(cfg.choice_pattern, std::regex::ECMAScript);
    std::regex(cfg.answer_marker_pattern, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw InvariantViolation(std::string("invalid verifier pattern: ") + e.what());
  }
}

VerifierConfig verifier_config_from_json(const Json& j) {
  VerifierConfig cfg;
  if (j.contains("choice_pattern")) cfg.choice_pattern = j.at("choice_pattern").get<std::string>();
  if (j.contains("answer_marker_pattern")) cfg.answer_marker_pattern = j.at("answer_marker_pattern").get<std::string>();
  if (j.contains("numeric_tolerance")) cfg.numeric_tolerance = j.at("numeric_tolerance").get<double>();
  if (j.contains("case_sensitive")) cfg.case_sensitive = j.at("case_sensitive").get<bool>();
  validate(cfg);
  return cfg;
}

Json to_json(const VerifierConfig& cfg) {
  Json j;
  j["choice_pattern"] = cfg.choice_pattern;
  j["answer_marker_pattern"] = cfg.answer_marker_pattern;
  j["numeric_tolerance"] = cfg.numeric_tolerance;
  j["case_sensitive"] = cfg.case_sensitive;
  return j;
}

std::optional<std::string> extract_final_answer(std::string_view raw_text, AnswerKind kind,
                                                const VerifierConfig& cfg) {
  const std::string text(raw_text);
  const MarkerHit marker = find_last_marker(text, cfg);

  if (kind == AnswerKind::kMultipleChoice) {
    if (marker.begin == std::string::npos) return last_choice(text, cfg);
    const auto stop = marker.end == std::string::npos ? text.size() : marker.end;
    return last_choice(text.substr(marker.begin, stop - marker.begin), cfg);
  }

  if (marker.begin == std::string::npos) return std::nullopt;
  std::size_t stop = marker.end;
  if (stop == std::string::npos) {
    stop = text.find('\n', marker.begin);
    if (stop == std::string::npos) stop = text.size();
  }
  std::string_view span = trim(std::string_view(text).substr(marker.begin, stop - marker.begin));
  if (span.empty()) return std::nullopt;
  return std::string(span);
}

std::optional<std::string> extract_final_answer(const Trajectory& trajectory, AnswerKind kind,
                                                const VerifierConfig& cfg) {
  return extract_final_answer(trajectory.raw_text, kind, cfg);
}

std::optional<double> parse_number(std::string_view text) {
  static const std::regex kThousands(R"([-+]?\d{1,3}(,\d{3})+(\.\d+)?)");
  static const std::regex kNumber(R"([-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)");
  std::string s(trim(text));
  if (std::regex_match(s, kThousands)) s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  if (!std::regex_match(s, kNumber)) return std::nullopt;
  const double v = std::strtod(s.c_str(), nullptr);
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::string normalize_free_form(std::string_view text, bool case_sensitive) {
  std::string s = collapse_whitespace(trim(text));
  if (!case_sensitive) s = lower(s);
  while (!s.empty() && (is_trailing_punct(s.back()) || s.back() == ' ')) s.pop_back();
  std::size_t lead = 0;
  while (lead < s.size() && (s[lead] == '$' || s[lead] == ' ')) ++lead;
  s.erase(0, lead);

  // "12 cm", "45 degrees", "12cm^2": keep the number when only units follow.
  static const std::regex kNumberWithUnits(R"(([-+]?[0-9][0-9.,]*(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z%][A-Za-z%^0-9 .]*))");
  std::smatch m;
  if (std::regex_match(s, m, kNumberWithUnits) && parse_number(m.str(1))) s = m.str(1);
  return s;
}

double verify(const std::optional<std::string>& predicted, std::string_view gold, AnswerKind kind,
              const VerifierConfig& cfg) {
  if (!predicted) return 0.0;
  if (kind == AnswerKind::kMultipleChoice) {
    const std::string p = normalize_choice(*predicted, cfg.case_sensitive);
    const std::string g = normalize_choice(gold, cfg.case_sensitive);
    return (!p.empty() && p == g) ? 1.0 : 0.0;
  }
  const std::string p = normalize_free_form(*predicted, cfg.case_sensitive);
  const std::string g = normalize_free_form(gold, cfg.case_sensitive);
  if (p == g) return 1.0;
  const auto pn = parse_number(p);
  const auto gn = parse_number(g);
  if (pn && gn) {
    const double scale = std::max(std::abs(*pn), std::abs(*gn));
    if (std::abs(*pn - *gn) <= cfg.numeric_tolerance * scale) return 1.0;
  }
  return 0.0;
}

}  // namespace autorubric::verifier
