#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autorubric/core/model.hpp"

namespace autorubric::judge {

struct JudgeVerdicts {
  std::vector<bool> verdicts;
  std::string raw_response;
};

/// A generative judge. Implementations must be safe to call from many threads.
/// Every scoring call either returns a parsed result or throws
/// JudgeUnavailable / UnparseableVerdict; failures are never turned into scores.
class Judge {
 public:
  virtual ~Judge() = default;

  /// One verdict per criterion, in criterion order. Only text is sent.
  virtual JudgeVerdicts score_against_rubrics(const Trajectory& trajectory, const RubricSet& rubrics) = 0;

  /// A rubric-free quality score in [0,1].
  virtual double holistic_score(const Trajectory& trajectory) = 0;

  /// Raw judge reply listing the checkpoints shared by the correct
  /// trajectories, as a numbered list.
  virtual std::string compose_rubrics(const ProblemInstance& problem, std::span<const Trajectory> correct,
                                      int max_criteria) = 0;

  /// True when the judge finds the final answer inconsistent with the derivation.
  virtual bool flags_inconsistent(const Trajectory& trajectory) = 0;

  /// Cheap reachability check; never throws.
  virtual bool probe() = 0;
};

/// Raised by transports; the gateway retries it and finally reports
/// JudgeUnavailable.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Sends one serialized chat-completion request and returns the response body.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string post(const std::string& body) = 0;
  virtual bool probe() = 0;
};

struct JudgeEndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string api_key_env = "JUDGE_API_KEY";
  std::string model_name = "judge";
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  int max_concurrency = 8;
  std::chrono::milliseconds retry_backoff{250};  // doubled after each failed attempt
  int max_output_tokens = 2048;
  double construction_temperature = 0.0;
  std::optional<std::filesystem::path> templates_dir;
  std::optional<std::filesystem::path> cache_dir;
};

void validate(const JudgeEndpointConfig& cfg);

}  // namespace autorubric::judge
