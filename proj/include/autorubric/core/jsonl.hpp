#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "autorubric/core/model.hpp"

namespace autorubric {

/// Reads a line-delimited JSON file. Blank lines are skipped; a malformed
/// line raises ParseError carrying the path and 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

std::vector<ProblemInstance> load_corpus(const std::filesystem::path& path);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

void save_corpus(const std::filesystem::path& path, const std::vector<ProblemInstance>& corpus);
void save_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories);

}  // namespace autorubric
