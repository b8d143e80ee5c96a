#include "autorubric/core/jsonl.hpp"

#include <fstream>
#include <sstream>

namespace autorubric {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<Json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw Error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

namespace {

template <typename T, typename Parse>
std::vector<T> load_records(const fs::path& path, Parse parse) {
  std::vector<T> out;
  std::size_t n = 0;
  for (const auto& j : read_jsonl(path)) {
    ++n;
    try {
      out.push_back(parse(j));
    } catch (const Error& e) {
      throw ParseError(path.string() + ": record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void save_records(const fs::path& path, const std::vector<T>& records) {
  std::string body;
  for (const auto& r : records) {
    body += dump_line(to_json(r));
    body += '\n';
  }
  write_file_atomic(path, body);
}

}  // namespace

std::vector<ProblemInstance> load_corpus(const fs::path& path) {
  auto corpus = load_records<ProblemInstance>(path, problem_from_json);
  validate_corpus(corpus);
  return corpus;
}

std::vector<Trajectory> load_trajectories(const fs::path& path) {
  return load_records<Trajectory>(path, trajectory_from_json);
}

void save_corpus(const fs::path& path, const std::vector<ProblemInstance>& corpus) { save_records(path, corpus); }

void save_trajectories(const fs::path& path, const std::vector<Trajectory>& trajectories) {
  save_records(path, trajectories);
}

}  // namespace autorubric
