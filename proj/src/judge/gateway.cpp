#include "autorubric/judge/gateway.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "autorubric/core/jsonl.hpp"
#include "autorubric/judge/verdict_parser.hpp"

namespace autorubric::judge {
namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1 << 20>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1 << 20>& sem_;
};

}  // namespace

void validate(const JudgeEndpointConfig& cfg) {
  if (cfg.max_concurrency < 1) throw InvariantViolation("max_concurrency must be >= 1");
  if (cfg.timeout.count() <= 0) throw InvariantViolation("timeout must be positive");
  if (cfg.max_retries < 0) throw InvariantViolation("max_retries must be >= 0");
  if (cfg.retry_backoff.count() < 0) throw InvariantViolation("retry_backoff must be >= 0");
  if (cfg.max_output_tokens <= 0) throw InvariantViolation("max_output_tokens must be positive");
}

std::string format_criteria(const RubricSet& rubrics) {
  std::string out;
  for (const auto& c : rubrics.criteria) {
    if (!out.empty()) out += '\n';
    out += std::to_string(c.index) + ". " + c.text;
  }
  return out;
}

std::string format_trajectories(std::span<const Trajectory> trajectories) {
  std::string out;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (i) out += "\n\n";
    out += "Solution " + std::to_string(i + 1) + ":\n" + trajectories[i].raw_text;
  }
  return out;
}

std::string extract_message_content(const std::string& response_body) {
  const auto j = Json::parse(response_body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UnparseableVerdict("judge response is not a JSON object");
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw UnparseableVerdict("judge response has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw UnparseableVerdict("judge response has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

GatewayJudge::GatewayJudge(JudgeEndpointConfig cfg, std::shared_ptr<ChatTransport> transport,
                           TemplateStore templates)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      templates_(std::move(templates)),
      slots_((validate(cfg_), cfg_.max_concurrency)) {
  if (!transport_) throw InvariantViolation("gateway needs a transport");
}

std::string GatewayJudge::request_body(const JudgeRequest& req) const {
  validate(req);
  Json body;
  body["model"] = cfg_.model_name;
  Json message;
  message["role"] = "user";
  message["content"] = render_prompt(req, templates_);
  body["messages"] = Json::array({message});
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_output_tokens;
  return dump_line(body);
}

std::optional<std::string> GatewayJudge::cache_lookup(const std::string& key) const {
  if (!cfg_.cache_dir) return std::nullopt;
  std::ifstream in(*cfg_.cache_dir / key, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void GatewayJudge::cache_store(const std::string& key, const std::string& content) {
  if (!cfg_.cache_dir) return;
  std::lock_guard lock(cache_mutex_);
  write_file_atomic(*cfg_.cache_dir / key, content);
}

std::string GatewayJudge::call(const JudgeRequest& req, const std::function<void(const std::string&)>& parse) {
  const std::string body = request_body(req);
  const std::string key = cfg_.cache_dir ? sha256_hex(body) : std::string();
  if (auto cached = cache_lookup(key)) {
    try {
      parse(*cached);
      return *cached;
    } catch (const UnparseableVerdict&) {
      // Stale or foreign cache entry; fall through to a live call.
    }
  }

  auto backoff = cfg_.retry_backoff;
  bool last_was_transport = true;
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0 && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    std::string response;
    try {
      SlotGuard slot(slots_);
      response = transport_->post(body);
    } catch (const TransportError& e) {
      last_was_transport = true;
      last_error = e.what();
      continue;
    }
    try {
      std::string content = extract_message_content(response);
      parse(content);
      cache_store(key, content);
      return content;
    } catch (const UnparseableVerdict& e) {
      last_was_transport = false;
      last_error = e.what();
    }
  }
  const std::string what = std::string(to_string(req.template_id)) + " failed after " +
                           std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error;
  if (last_was_transport) throw JudgeUnavailable(what);
  throw UnparseableVerdict(what);
}

JudgeVerdicts GatewayJudge::score_against_rubrics(const Trajectory& trajectory, const RubricSet& rubrics) {
  if (rubrics.criteria.empty()) throw InvariantViolation("rubric set has no criteria");
  JudgeRequest req;
  req.template_id = TemplateId::kRubricScoring;
  req.max_output_tokens = cfg_.max_output_tokens;
  req.slots = {{"criteria", format_criteria(rubrics)},
               {"trajectory", trajectory.raw_text},
               {"criterion_count", std::to_string(rubrics.criteria.size())}};
  JudgeVerdicts out;
  out.raw_response = call(req, [&](const std::string& reply) { out.verdicts = parse_verdicts(reply, rubrics.criteria.size()); });
  return out;
}

double GatewayJudge::holistic_score(const Trajectory& trajectory) {
  if (trajectory.raw_text.empty()) throw InvariantViolation("trajectory is empty");
  JudgeRequest req;
  req.template_id = TemplateId::kHolisticScoring;
  req.max_output_tokens = cfg_.max_output_tokens;
  req.slots = {{"trajectory", trajectory.raw_text}};
  double score = 0.0;
  call(req, [&](const std::string& reply) { score = parse_holistic_score(reply); });
  return score;
}

std::string GatewayJudge::compose_rubrics(const ProblemInstance& problem, std::span<const Trajectory> correct,
                                          int max_criteria) {
  JudgeRequest req;
  req.template_id = TemplateId::kRubricConstruction;
  req.temperature = cfg_.construction_temperature;
  req.max_output_tokens = cfg_.max_output_tokens;
  req.slots = {{"question", problem.question_text},
               {"answer", problem.gold_answer},
               {"trajectories", format_trajectories(correct)},
               {"max_criteria", std::to_string(max_criteria)}};
  // An empty list is a valid reply here; range checks belong to the caller.
  return call(req, [](const std::string&) {});
}

bool GatewayJudge::flags_inconsistent(const Trajectory& trajectory) {
  JudgeRequest req;
  req.template_id = TemplateId::kFaithfulnessCheck;
  req.max_output_tokens = cfg_.max_output_tokens;
  req.slots = {{"trajectory", trajectory.raw_text}};
  bool flagged = false;
  call(req, [&](const std::string& reply) { flagged = parse_inconsistency_verdict(reply); });
  return flagged;
}

bool GatewayJudge::probe() {
  try {
    return transport_->probe();
  } catch (...) {
    return false;
  }
}

}  // namespace autorubric::judge
