#include <doctest.h>

#include <fstream>

#include "autorubric/core/jsonl.hpp"
#include "autorubric/forge/rubric_store.hpp"
#include "support/fixtures.hpp"

using namespace autorubric;
using namespace autorubric::forge;

namespace {

RubricSet sample_set(const std::string& pid, int m) {
  RubricSet s;
  s.problem_id = pid;
  for (int i = 1; i <= m; ++i) s.criteria.push_back({i, "Criterion number " + std::to_string(i) + " for " + pid});
  s.source_trajectory_ids = {pid + "-a", pid + "-b"};
  s.created_at = "2026-01-01T00:00:00Z";
  return s;
}

}  // namespace

TEST_CASE("missing directory loads as an empty store") {
  fixtures::TempDir dir("store");
  CHECK(RubricStore::load(dir / "absent").empty());
}

TEST_CASE("save and load round trip in insertion order") {
  fixtures::TempDir dir("store");
  RubricStore store;
  store.put(sample_set("p2", 2));
  store.put(sample_set("p1", 3));
  store.save(dir.path());
  const auto loaded = RubricStore::load(dir.path());
  CHECK(loaded == store);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.sets()[0].problem_id == "p2");
  CHECK(loaded.find("p1")->criteria.size() == 3);
  CHECK(loaded.find("p9") == nullptr);
}

TEST_CASE("put replaces an existing set in place") {
  RubricStore store;
  store.put(sample_set("p1", 2));
  store.put(sample_set("p2", 2));
  store.put(sample_set("p1", 4));
  REQUIRE(store.size() == 2);
  CHECK(store.sets()[0].criteria.size() == 4);
}

TEST_CASE("index offsets point at each record line") {
  fixtures::TempDir dir("store");
  RubricStore store;
  for (int i = 0; i < 5; ++i) store.put(sample_set("p" + std::to_string(i), 1 + i % 3));
  store.save(dir.path());
  const auto index = Json::parse(read_file(dir / RubricStore::kIndexFile));
  const auto records = read_file(dir / RubricStore::kRecordsFile);
  for (const auto& set : store.sets()) {
    const auto offset = index.at(set.problem_id).get<std::size_t>();
    const auto end = records.find('\n', offset);
    CHECK(records.substr(offset, end - offset) == store.line(set.problem_id));
    CHECK(RubricStore::read_one(dir.path(), set.problem_id) == set);
  }
  CHECK_FALSE(RubricStore::read_one(dir.path(), "nope").has_value());
}

TEST_CASE("a torn final line is ignored on load") {
  fixtures::TempDir dir("store");
  RubricStore store;
  store.put(sample_set("p1", 2));
  store.save(dir.path());
  {
    std::ofstream out(dir / RubricStore::kRecordsFile, std::ios::app | std::ios::binary);
    out << R"({"problem_id":"p2","criteria":[{"index":1,"te)";
  }
  const auto loaded = RubricStore::load(dir.path());
  CHECK(loaded.size() == 1);
  CHECK(loaded.contains("p1"));
}

TEST_CASE("appended records are visible after load") {
  fixtures::TempDir dir("store");
  append_record(dir.path(), sample_set("p1", 1));
  append_record(dir.path(), sample_set("p2", 2));
  const auto loaded = RubricStore::load(dir.path());
  CHECK(loaded.size() == 2);
  CHECK(loaded.find("p2")->criteria.size() == 2);
}
