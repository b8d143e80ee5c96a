#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>

#include "autorubric/judge/judge.hpp"
#include "autorubric/judge/templates.hpp"

namespace autorubric::judge {

/// Judge backed by a chat-completion endpoint. Renders the template, sends
/// an OpenAI-compatible body, retries transport failures and unparseable
/// replies with the same body, and bounds in-flight calls at
/// max_concurrency across all threads.
class GatewayJudge final : public Judge {
 public:
  GatewayJudge(JudgeEndpointConfig cfg, std::shared_ptr<ChatTransport> transport,
               TemplateStore templates = TemplateStore::defaults());

  JudgeVerdicts score_against_rubrics(const Trajectory& trajectory, const RubricSet& rubrics) override;
  double holistic_score(const Trajectory& trajectory) override;
  std::string compose_rubrics(const ProblemInstance& problem, std::span<const Trajectory> correct,
                              int max_criteria) override;
  bool flags_inconsistent(const Trajectory& trajectory) override;
  bool probe() override;

  /// Request body the gateway would send for a rendered request.
  std::string request_body(const JudgeRequest& req) const;

  const JudgeEndpointConfig& config() const { return cfg_; }

 private:
  // Sends `req` and hands the reply text to `parse`; returns the accepted reply.
  std::string call(const JudgeRequest& req, const std::function<void(const std::string&)>& parse);
  std::optional<std::string> cache_lookup(const std::string& key) const;
  void cache_store(const std::string& key, const std::string& content);

  JudgeEndpointConfig cfg_;
  std::shared_ptr<ChatTransport> transport_;
  TemplateStore templates_;
  std::counting_semaphore<1 << 20> slots_;
  std::mutex cache_mutex_;
};

/// "1. text" per line.
std::string format_criteria(const RubricSet& rubrics);
/// Numbered solution blocks separated by blank lines.
std::string format_trajectories(std::span<const Trajectory> trajectories);

/// Content of choices[0].message.content; UnparseableVerdict if missing.
std::string extract_message_content(const std::string& response_body);

/// Hex SHA-256, used as the content address of cached judge replies.
std::string sha256_hex(const std::string& data);

}  // namespace autorubric::judge
