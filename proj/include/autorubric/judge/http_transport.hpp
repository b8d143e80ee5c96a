#pragma once

#include <chrono>
#include <string>

#include "autorubric/judge/judge.hpp"

namespace autorubric::judge {

struct ParsedUrl {
  std::string scheme;  // http or https
  std::string host;
  int port = 0;
  std::string path_prefix;  // no trailing slash
};

ParsedUrl parse_base_url(const std::string& url);

/// POSTs to {base_url}/chat/completions with a bearer token read from the
/// configured environment variable. Connection failures, timeouts and
/// non-2xx statuses raise TransportError.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(const JudgeEndpointConfig& cfg);

  std::string post(const std::string& body) override;
  bool probe() override;

 private:
  ParsedUrl url_;
  std::string token_;
  std::chrono::milliseconds timeout_;
};

}  // namespace autorubric::judge
