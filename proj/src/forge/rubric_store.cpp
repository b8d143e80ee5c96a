#include "autorubric/forge/rubric_store.hpp"

#include <fstream>

#include "autorubric/core/jsonl.hpp"

namespace autorubric::forge {

namespace fs = std::filesystem;

RubricStore RubricStore::load(const fs::path& dir) {
  RubricStore store;
  const fs::path records = dir / kRecordsFile;
  if (!fs::exists(records)) return store;

  std::ifstream in(records, std::ios::binary);
  if (!in) throw Error("cannot open '" + records.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const bool complete_line = !in.eof();
    try {
      store.put(rubric_set_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      if (!complete_line) break;  // torn append
      throw ParseError(records.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

std::optional<RubricSet> RubricStore::read_one(const fs::path& dir, const std::string& problem_id) {
  const fs::path index_path = dir / kIndexFile;
  if (!fs::exists(index_path)) return std::nullopt;
  const auto index = Json::parse(read_file(index_path));
  auto it = index.find(problem_id);
  if (it == index.end()) return std::nullopt;
  std::ifstream in(dir / kRecordsFile, std::ios::binary);
  in.seekg(it->get<std::int64_t>());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("index offset for '" + problem_id + "' is past the end");
  auto set = rubric_set_from_json(Json::parse(line));
  if (set.problem_id != problem_id) throw ParseError("index entry for '" + problem_id + "' points at another record");
  return set;
}

void RubricStore::put(RubricSet set) {
  validate(set);
  if (auto it = by_id_.find(set.problem_id); it != by_id_.end()) {
    sets_[it->second] = std::move(set);
    return;
  }
  by_id_.emplace(set.problem_id, sets_.size());
  sets_.push_back(std::move(set));
}

const RubricSet* RubricStore::find(const std::string& problem_id) const {
  auto it = by_id_.find(problem_id);
  return it == by_id_.end() ? nullptr : &sets_[it->second];
}

std::string RubricStore::line(const std::string& problem_id) const {
  const auto* set = find(problem_id);
  if (!set) throw InvariantViolation("no rubric set for '" + problem_id + "'");
  return dump_line(to_json(*set));
}

void RubricStore::save(const fs::path& dir) const {
  fs::create_directories(dir);
  std::string records;
  Json index = Json::object();
  for (const auto& set : sets_) {
    index[set.problem_id] = records.size();
    records += dump_line(to_json(set));
    records += '\n';
  }
  write_file_atomic(dir / kRecordsFile, records);
  write_file_atomic(dir / kIndexFile, index.dump(2) + "\n");
}

void append_record(const fs::path& dir, const RubricSet& set) {
  fs::create_directories(dir);
  std::ofstream out(dir / RubricStore::kRecordsFile, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to rubric store in '" + dir.string() + "'");
  out << dump_line(to_json(set)) << '\n';
  out.flush();
}

}  // namespace autorubric::forge
