#include "autorubric/judge/http_transport.hpp"

#include <httplib.h>

#include <cstdlib>
#include <regex>

namespace autorubric::judge {
namespace {

std::unique_ptr<httplib::Client> make_client(const ParsedUrl& url, std::chrono::milliseconds timeout) {
  const std::string origin = url.scheme + "://" + url.host + ":" + std::to_string(url.port);
  auto cli = std::make_unique<httplib::Client>(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  cli->set_connection_timeout(secs.count(), usecs.count());
  cli->set_read_timeout(secs.count(), usecs.count());
  cli->set_write_timeout(secs.count(), usecs.count());
  return cli;
}

}  // namespace

ParsedUrl parse_base_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw InvariantViolation("invalid base_url '" + url + "'");
  ParsedUrl out;
  out.scheme = m.str(1);
  for (auto& c : out.scheme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  out.host = m.str(2);
  out.port = m[3].matched ? std::stoi(m.str(3)) : (out.scheme == "https" ? 443 : 80);
  out.path_prefix = m.str(4);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

HttpChatTransport::HttpChatTransport(const JudgeEndpointConfig& cfg)
    : url_(parse_base_url(cfg.base_url)), timeout_(cfg.timeout) {
  if (!cfg.api_key_env.empty()) {
    if (const char* token = std::getenv(cfg.api_key_env.c_str())) token_ = token;
  }
}

std::string HttpChatTransport::post(const std::string& body) {
  auto cli = make_client(url_, timeout_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = cli->Post(url_.path_prefix + "/chat/completions", headers, body, "application/json");
  if (!res) throw TransportError("judge request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("judge returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

bool HttpChatTransport::probe() {
  auto cli = make_client(url_, std::min(timeout_, std::chrono::milliseconds(5000)));
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = cli->Get(url_.path_prefix + "/models", headers);
  return res && res->status >= 200 && res->status < 300;
}

}  // namespace autorubric::judge
