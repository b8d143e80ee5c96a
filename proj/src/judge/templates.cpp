#include "autorubric/judge/templates.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "autorubric/core/errors.hpp"

namespace autorubric::judge {
namespace {

#include "default_templates.inc"

bool is_slot_char(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_' || std::isdigit(static_cast<unsigned char>(c)); }

// Calls on_text for literal runs and on_slot for each placeholder name.
template <typename OnText, typename OnSlot>
void scan_template(std::string_view t, OnText on_text, OnSlot on_slot) {
  std::size_t i = 0;
  while (i < t.size()) {
    const char c = t[i];
    if ((c == '{' || c == '}') && i + 1 < t.size() && t[i + 1] == c) {
      on_text(std::string_view(&t[i], 1));
      i += 2;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      while (j < t.size() && is_slot_char(t[j])) ++j;
      if (j > i + 1 && j < t.size() && t[j] == '}') {
        on_slot(t.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    on_text(t.substr(i, 1));
    ++i;
  }
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::kRubricConstruction: return "rubric_construction";
    case TemplateId::kRubricScoring: return "rubric_scoring";
    case TemplateId::kHolisticScoring: return "holistic_scoring";
    case TemplateId::kFaithfulnessCheck: return "faithfulness_check";
  }
  return "unknown";
}

TemplateId parse_template_id(std::string_view text) {
  for (auto id : kAllTemplates) {
    if (to_string(id) == text) return id;
  }
  throw UnknownTemplate("unknown template id '" + std::string(text) + "'");
}

bool is_scoring_template(TemplateId id) { return id != TemplateId::kRubricConstruction; }

void validate(const JudgeRequest& req) {
  if (is_scoring_template(req.template_id) && req.temperature != 0.0) {
    throw InvariantViolation("scoring template '" + std::string(to_string(req.template_id)) +
                             "' requires temperature 0");
  }
  if (!(req.temperature >= 0.0)) throw InvariantViolation("temperature must be >= 0");
  if (req.max_output_tokens <= 0) throw InvariantViolation("max_output_tokens must be positive");
}

TemplateStore TemplateStore::defaults() {
  TemplateStore store;
  store.set(TemplateId::kRubricConstruction, std::string(kDefaultRubricConstruction));
  store.set(TemplateId::kRubricScoring, std::string(kDefaultRubricScoring));
  store.set(TemplateId::kHolisticScoring, std::string(kDefaultHolisticScoring));
  store.set(TemplateId::kFaithfulnessCheck, std::string(kDefaultFaithfulnessCheck));
  return store;
}

TemplateStore TemplateStore::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("template directory '" + dir.string() + "' does not exist");
  TemplateStore store = defaults();
  for (auto id : kAllTemplates) {
    for (const auto& name : {std::string(to_string(id)), std::string(to_string(id)) + ".txt"}) {
      const auto path = dir / name;
      if (!std::filesystem::is_regular_file(path)) continue;
      std::ifstream in(path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      store.set(id, ss.str());
      break;
    }
  }
  return store;
}

void TemplateStore::set(TemplateId id, std::string text) { texts_[id] = std::move(text); }

bool TemplateStore::contains(TemplateId id) const { return texts_.count(id) != 0; }

const std::string& TemplateStore::get(TemplateId id) const {
  auto it = texts_.find(id);
  if (it == texts_.end()) throw UnknownTemplate("template '" + std::string(to_string(id)) + "' not in store");
  return it->second;
}

std::vector<std::string> required_slots(std::string_view template_text) {
  std::vector<std::string> names;
  scan_template(
      template_text, [](std::string_view) {},
      [&](std::string_view name) {
        for (const auto& n : names) {
          if (n == name) return;
        }
        names.emplace_back(name);
      });
  return names;
}

std::string render_template(std::string_view template_text, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(template_text.size());
  scan_template(
      template_text, [&](std::string_view text) { out += text; },
      [&](std::string_view name) {
        auto it = slots.find(std::string(name));
        if (it == slots.end()) throw MissingSlot("missing slot '" + std::string(name) + "'");
        out += it->second;
      });
  return out;
}

std::string render_prompt(const JudgeRequest& req, const TemplateStore& templates) {
  return render_template(templates.get(req.template_id), req.slots);
}

}  // namespace autorubric::judge
