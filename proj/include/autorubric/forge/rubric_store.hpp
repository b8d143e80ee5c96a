#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "autorubric/core/model.hpp"

namespace autorubric::forge {

/// Rubric sets keyed by problem id, in insertion order.
///
/// On disk a store is a directory holding `rubrics.jsonl` (one RubricSet per
/// line) and `index.json` (problem_id -> byte offset of its line). The index is
/// rewritten on every save; a truncated final line left by an interrupted
/// append is ignored on load.
class RubricStore {
 public:
  static constexpr const char* kRecordsFile = "rubrics.jsonl";
  static constexpr const char* kIndexFile = "index.json";

  /// Empty store when the directory or its records file does not exist.
  static RubricStore load(const std::filesystem::path& dir);

  /// Reads a single record through the index without loading the store.
  static std::optional<RubricSet> read_one(const std::filesystem::path& dir, const std::string& problem_id);

  void put(RubricSet set);
  const RubricSet* find(const std::string& problem_id) const;
  bool contains(const std::string& problem_id) const { return find(problem_id) != nullptr; }

  /// Canonical serialized line for a stored set (no trailing newline).
  std::string line(const std::string& problem_id) const;

  const std::vector<RubricSet>& sets() const { return sets_; }
  std::size_t size() const { return sets_.size(); }
  bool empty() const { return sets_.empty(); }

  /// Writes records and index atomically, in insertion order.
  void save(const std::filesystem::path& dir) const;

  bool operator==(const RubricStore& other) const { return sets_ == other.sets_; }

 private:
  std::vector<RubricSet> sets_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Appends one record to `rubrics.jsonl` without touching the index. Used
/// for crash-safe progress during aggregation.
void append_record(const std::filesystem::path& dir, const RubricSet& set);

}  // namespace autorubric::forge
