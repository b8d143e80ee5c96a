#include "autorubric/service/config.hpp"

#include <cctype>
#include <charconv>

#include "autorubric/core/jsonl.hpp"

namespace autorubric::service {
namespace {

class Cursor {
 public:
  Cursor(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("config line " + std::to_string(line_no_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end_or_comment() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string key() {
    skip_ws();
    if (peek() == '"') return basic_string();
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  Json value() {
    skip_ws();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

 private:
  std::string basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string literal_string() {
    ++pos_;
    const auto end = s_.find('\'', pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  Json array() {
    ++pos_;
    Json out = Json::array();
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(value());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
        if (peek() == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']' in array");
    }
  }

  Json number() {
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == '_')) {
      ++pos_;
    }
    std::string token;
    for (char c : s_.substr(start, pos_ - start)) {
      if (c != '_') token += c;
    }
    if (token.empty()) fail("expected a value");
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec == std::errc() && p == token.data() + token.size()) return v;
    } else {
      double v = 0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec == std::errc() && p == token.data() + token.size()) return v;
    }
    fail("invalid value '" + token + "'");
  }

  std::string_view s_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

Json parse_config_text(std::string_view text) {
  Json root = Json::object();
  Json* table = &root;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    Cursor cur(line, line_no);
    if (cur.at_end_or_comment()) continue;
    if (cur.peek() == '[') {
      cur.expect('[');
      table = &root;
      while (true) {
        const auto name = cur.key();
        if (!table->contains(name)) (*table)[name] = Json::object();
        table = &(*table)[name];
        if (!table->is_object()) cur.fail("'" + name + "' is not a table");
        cur.skip_ws();
        if (cur.peek() == '.') {
          cur.expect('.');
          continue;
        }
        break;
      }
      cur.expect(']');
      if (!cur.at_end_or_comment()) cur.fail("trailing characters after table header");
      continue;
    }
    const auto key = cur.key();
    cur.expect('=');
    Json value = cur.value();
    if (!cur.at_end_or_comment()) cur.fail("trailing characters after value");
    if (table->contains(key)) cur.fail("duplicate key '" + key + "'");
    (*table)[key] = std::move(value);
  }
  return root;
}

void validate(const ServiceConfig& cfg) {
  if (cfg.port < 0 || cfg.port > 65535) throw InvariantViolation("port must lie in [0, 65535]");
  if (cfg.max_batch_size < 1) throw InvariantViolation("max_batch_size must be >= 1");
  if (cfg.fanout_workers < 1) throw InvariantViolation("fanout_workers must be >= 1");
  if (cfg.item_timeout.count() <= 0) throw InvariantViolation("item_timeout_ms must be positive");
  reward::validate(cfg.reward);
  verifier::validate(cfg.verifier);
}

ServiceConfig service_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  try {
    if (j.contains("server")) {
      const auto& s = j.at("server");
      cfg.host = s.value("host", cfg.host);
      cfg.port = s.value("port", cfg.port);
      cfg.max_batch_size = s.value("max_batch_size", cfg.max_batch_size);
      cfg.fanout_workers = s.value("fanout_workers", cfg.fanout_workers);
      cfg.item_timeout = std::chrono::milliseconds(s.value("item_timeout_ms", cfg.item_timeout.count()));
      cfg.probe_ttl = std::chrono::seconds(s.value("probe_ttl_s", cfg.probe_ttl.count()));
      if (s.contains("auth_token_env")) cfg.auth_token_env = s.at("auth_token_env").get<std::string>();
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      cfg.corpus_path = resolve(base_dir, d.at("corpus").get<std::string>());
      cfg.rubric_dir = resolve(base_dir, d.at("rubric_dir").get<std::string>());
    } else {
      throw ParseError("config needs a [data] table with corpus and rubric_dir");
    }
    if (j.contains("reward")) {
      const auto& r = j.at("reward");
      cfg.reward.lambda = r.value("lambda", cfg.reward.lambda);
      cfg.reward.std_epsilon = r.value("std_epsilon", cfg.reward.std_epsilon);
      if (r.contains("no_rubric_policy")) {
        cfg.reward.no_rubric_policy = reward::parse_no_rubric_policy(r.at("no_rubric_policy").get<std::string>());
      }
    }
    if (j.contains("verifier")) cfg.verifier = verifier::verifier_config_from_json(j.at("verifier"));
    if (j.contains("judge")) {
      cfg.judge = j.at("judge");
      // A mock judge may keep its rule table in a separate JSON file.
      if (cfg.judge.contains("rules_file")) {
        const auto path = resolve(base_dir, cfg.judge.at("rules_file").get<std::string>());
        Json rules = Json::parse(read_file(path));
        for (auto& [k, v] : cfg.judge.items()) {
          if (k != "rules_file") rules[k] = v;
        }
        cfg.judge = std::move(rules);
      }
      for (const char* key : {"templates_dir", "cache_dir"}) {
        if (cfg.judge.contains(key)) cfg.judge[key] = resolve(base_dir, cfg.judge.at(key).get<std::string>()).string();
      }
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("service config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return service_config_from_json(parse_config_text(read_file(path)), base);
}

}  // namespace autorubric::service
