#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace autorubric::judge {

enum class TemplateId { kRubricConstruction, kRubricScoring, kHolisticScoring, kFaithfulnessCheck };

inline constexpr std::array<TemplateId, 4> kAllTemplates = {
    TemplateId::kRubricConstruction, TemplateId::kRubricScoring, TemplateId::kHolisticScoring,
    TemplateId::kFaithfulnessCheck};

std::string_view to_string(TemplateId id);
TemplateId parse_template_id(std::string_view text);  // UnknownTemplate on failure

/// Scoring templates must run at temperature 0.
bool is_scoring_template(TemplateId id);

struct JudgeRequest {
  TemplateId template_id = TemplateId::kRubricScoring;
  std::map<std::string, std::string> slots;
  int max_output_tokens = 1024;
  double temperature = 0.0;
};

/// Throws InvariantViolation if a scoring template runs above temperature 0
/// or the token budget is not positive.
void validate(const JudgeRequest& req);

/// Template texts keyed by id. `{slot}` marks a placeholder; `{{` and `}}`
/// produce literal braces.
class TemplateStore {
 public:
  /// The templates shipped with the library.
  static TemplateStore defaults();

  /// Loads `<dir>/<template_id>` or `<dir>/<template_id>.txt` for every id
  /// present; ids missing from the directory keep their default text.
  static TemplateStore from_directory(const std::filesystem::path& dir);

  void set(TemplateId id, std::string text);
  bool contains(TemplateId id) const;
  const std::string& get(TemplateId id) const;  // UnknownTemplate if absent

 private:
  std::map<TemplateId, std::string> texts_;
};

/// Placeholder names referenced by a template, in first-appearance order.
std::vector<std::string> required_slots(std::string_view template_text);

/// Substitutes every placeholder. Throws MissingSlot or UnknownTemplate.
std::string render_prompt(const JudgeRequest& req, const TemplateStore& templates);

std::string render_template(std::string_view template_text, const std::map<std::string, std::string>& slots);

}  // namespace autorubric::judge
