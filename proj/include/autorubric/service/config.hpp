#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "autorubric/core/model.hpp"
#include "autorubric/reward/reward_engine.hpp"
#include "autorubric/verifier/answer_verifier.hpp"

namespace autorubric::service {

/// Parses the configuration dialect: `[section]` headers, `key = value`
/// pairs, `#` comments. Values are basic or literal strings, integers,
/// floats, booleans, or single-line arrays of those. Sections become nested
/// objects; dotted section names nest further.
Json parse_config_text(std::string_view text);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path corpus_path;
  std::filesystem::path rubric_dir;
  Json judge = Json::object();  // passed to judge::make_judge
  reward::RewardConfig reward;
  verifier::VerifierConfig verifier;
  std::size_t max_batch_size = 16384;
  std::size_t fanout_workers = 16;
  std::chrono::milliseconds item_timeout{120000};
  std::chrono::seconds probe_ttl{30};
  std::optional<std::string> auth_token_env;  // shared static token, read from this variable
};

void validate(const ServiceConfig& cfg);

/// Relative paths inside the file are resolved against `base_dir`.
ServiceConfig service_config_from_json(const Json& j, const std::filesystem::path& base_dir);
ServiceConfig load_service_config(const std::filesystem::path& path);

}  // namespace autorubric::service
