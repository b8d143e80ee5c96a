// Command-line entry point: rubric aggregation, corpus stats, the reward
// service, and the GRPO sandbox.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "autorubric/core/jsonl.hpp"
#include "autorubric/forge/aggregation.hpp"
#include "autorubric/judge/http_transport.hpp"
#include "autorubric/judge/mock_judge.hpp"
#include "autorubric/sandbox/experiment.hpp"
#include "autorubric/sandbox/trace_io.hpp"
#include "autorubric/service/config.hpp"
#include "autorubric/service/http_server.hpp"

namespace ar = autorubric;

namespace {

std::atomic<bool> g_stop{false};
std::atomic<bool> g_reload{false};

void on_signal(int sig) {
  if (sig == SIGHUP) {
    g_reload = true;
  } else {
    g_stop = true;
  }
}

std::shared_ptr<ar::judge::Judge> judge_or_default(const std::string& path) {
  if (!path.empty()) return ar::judge::make_judge_from_file(path);
  return ar::judge::make_judge(ar::Json{{"kind", "mock"}});
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

httplib::Client client_for(const std::string& url) {
  const auto parsed = ar::judge::parse_base_url(url);
  httplib::Client client(parsed.scheme + "://" + parsed.host + ":" + std::to_string(parsed.port));
  client.set_read_timeout(std::chrono::seconds(600));
  return client;
}

std::string path_prefix(const std::string& url) { return ar::judge::parse_base_url(url).path_prefix; }

int cmd_aggregate(const std::string& corpus_path, const std::string& rollouts_path, const std::string& out_dir,
                  const std::string& judge_path, const ar::forge::AggregationConfig& cfg,
                  const std::string& verifier_path) {
  const auto corpus = ar::load_corpus(corpus_path);
  const auto rollouts = ar::forge::group_rollouts(ar::load_trajectories(rollouts_path));
  ar::verifier::VerifierConfig vcfg;
  if (!verifier_path.empty()) vcfg = ar::verifier::verifier_config_from_json(ar::Json::parse(ar::read_file(verifier_path)));
  auto judge = judge_or_default(judge_path);
  const auto report = ar::forge::run_aggregation(corpus, rollouts, cfg, vcfg, *judge, out_dir);
  std::cout << ar::forge::to_json(report).dump(2) << '\n';
  return report.failures.empty() ? 0 : 2;
}

int cmd_stats(const std::string& rubric_dir, const std::string& corpus_path) {
  const auto store = ar::forge::RubricStore::load(rubric_dir);
  const auto corpus = ar::load_corpus(corpus_path);
  std::cout << ar::forge::to_json(ar::forge::compute_stats(store, corpus.size())).dump(2) << '\n';
  return 0;
}

int cmd_serve(const std::string& config_path, int port_override) {
  auto cfg = ar::service::load_service_config(config_path);
  if (port_override >= 0) cfg.port = port_override;
  auto corpus = ar::load_corpus(cfg.corpus_path);
  auto store = ar::forge::RubricStore::load(cfg.rubric_dir);
  ar::service::ServiceSettings settings;
  settings.reward = cfg.reward;
  settings.verifier = cfg.verifier;
  settings.max_batch_size = cfg.max_batch_size;
  settings.fanout_workers = cfg.fanout_workers;
  settings.item_timeout = cfg.item_timeout;
  settings.probe_ttl = cfg.probe_ttl;
  auto service = std::make_shared<ar::service::RewardService>(std::move(corpus), std::move(store),
                                                              ar::judge::make_judge(cfg.judge), settings);

  ar::service::ServerOptions options;
  options.host = cfg.host;
  options.port = cfg.port;
  if (cfg.auth_token_env) {
    if (const char* token = std::getenv(cfg.auth_token_env->c_str()); token && *token) options.auth_token = token;
  }
  const auto rubric_dir = cfg.rubric_dir;
  options.reload = [rubric_dir] { return ar::forge::RubricStore::load(rubric_dir); };
  options.log = &std::cerr;

  ar::service::HttpServer server(service, options);
  const int port = server.bind();
  std::cout << ar::dump_line(ar::Json{{"event", "listening"}, {"host", cfg.host}, {"port", port}}) << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGHUP, on_signal);
  std::thread watcher([&] {
    while (!g_stop) {
      if (g_reload.exchange(false)) {
        const auto n = server.reload_rubrics();
        std::cerr << ar::dump_line(ar::Json{{"event", "reloaded"}, {"rubric_count", n}}) << std::endl;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
  });
  server.listen();
  g_stop = true;
  watcher.join();
  return 0;
}

int cmd_reload(const std::string& url, const std::string& token_env) {
  auto client = client_for(url);
  httplib::Headers headers;
  if (const char* token = std::getenv(token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  auto res = client.Post(path_prefix(url) + "/admin/reload-rubrics", headers, "", "application/json");
  if (!res) {
    std::cerr << "reload failed: " << httplib::to_string(res.error()) << '\n';
    return 1;
  }
  std::cout << res->body << '\n';
  return res->status == 200 ? 0 : 1;
}

int cmd_score(const std::string& url, const std::string& in_path, const std::string& out_path,
              const std::string& token_env) {
  auto client = client_for(url);
  httplib::Headers headers;
  if (const char* token = std::getenv(token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  auto res = client.Post(path_prefix(url) + "/score", headers, ar::read_file(in_path), "application/json");
  if (!res) {
    std::cerr << "score request failed: " << httplib::to_string(res.error()) << '\n';
    return 1;
  }
  if (out_path.empty()) {
    std::cout << res->body << '\n';
  } else {
    ar::write_file_atomic(out_path, res->body + "\n");
  }
  if (res->status != 200) std::cerr << "status " << res->status << '\n';
  return res->status == 200 ? 0 : 1;
}

int cmd_sandbox_run(double lambda, std::uint64_t seed, const ar::sandbox::ExperimentConfig& cfg,
                    const std::string& out_path) {
  const auto summary = ar::sandbox::run_sandbox(lambda, seed, cfg);
  if (!out_path.empty()) ar::sandbox::write_trace(out_path, summary.trace);
  std::cout << ar::sandbox::to_json(summary).dump(2) << '\n';
  return 0;
}

int cmd_sandbox_compare(const std::string& lambdas_text, std::size_t n_seeds, std::uint64_t first_seed,
                        const ar::sandbox::ExperimentConfig& cfg, const std::string& out_dir) {
  const auto lambdas = parse_list(lambdas_text);
  if (lambdas.empty()) throw ar::InvariantViolation("--lambdas is empty");
  ar::Json runs = ar::Json::array();
  std::printf("%-6s %-7s %-14s %-14s %-16s %-12s\n", "seed", "lambda", "faithful_mass", "answer_reward",
              "tail_variance", "inconsistent");
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto seed = first_seed + s;
    for (double lambda : lambdas) {
      const auto r = ar::sandbox::run_sandbox(lambda, seed, cfg);
      std::printf("%-6llu %-7.3f %-14.6f %-14.6f %-16.3e %-12.4f\n", static_cast<unsigned long long>(seed), lambda,
                  r.final_faithful_mass, r.final_answer_reward, r.answer_tail_variance, r.faithfulness.rate);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ostringstream name;
        name << "trace_lambda" << lambda << "_seed" << seed << ".jsonl";
        ar::sandbox::write_trace(std::filesystem::path(out_dir) / name.str(), r.trace);
      }
      runs.push_back(ar::sandbox::to_json(r));
    }
  }
  if (!out_dir.empty()) ar::write_file_atomic(std::filesystem::path(out_dir) / "summary.json", runs.dump(2) + "\n");
  return 0;
}

int cmd_sandbox_plot(const std::vector<std::string>& traces, const std::vector<std::string>& labels,
                     const std::string& out_path) {
  std::vector<ar::sandbox::PlotSeries> series;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const std::string label = i < labels.size() ? labels[i] : std::filesystem::path(traces[i]).stem().string();
    series.push_back({label, ar::sandbox::read_trace(traces[i])});
  }
  ar::write_file_atomic(out_path, ar::sandbox::render_svg(series));
  return 0;
}

void add_train_options(CLI::App* cmd, ar::sandbox::ExperimentConfig& cfg, std::string& kl) {
  cmd->add_option("--steps", cfg.train.steps, "training steps")->capture_default_str();
  cmd->add_option("--lr", cfg.train.learning_rate, "learning rate")->capture_default_str();
  cmd->add_option("--group-size", cfg.train.group_size, "rollouts per group (G)")->capture_default_str();
  cmd->add_option("--tasks", cfg.suite.n_tasks, "synthetic tasks")->capture_default_str();
  cmd->add_option("--clip-eps", cfg.train.surrogate.clip_epsilon, "clip epsilon")->capture_default_str();
  cmd->add_option("--kl-beta", cfg.train.surrogate.kl_beta, "KL penalty weight")->capture_default_str();
  cmd->add_option("--kl", kl, "KL estimator: exact_categorical or k3")->capture_default_str();
  cmd->add_option("--temperature", cfg.train.temperature, "policy temperature")->capture_default_str();
  cmd->add_option("--eval-samples", cfg.eval_samples_per_task, "samples per task for the faithfulness eval")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rubric-based reward tooling"};
  app.require_subcommand(1);

  std::string corpus, rollouts, out, judge_path, verifier_path, rubrics, config, url, in_path;
  std::string token_env = "REWARD_SERVICE_TOKEN";
  ar::forge::AggregationConfig agg;
  int port = -1;

  auto* aggregate = app.add_subcommand("aggregate", "build rubric sets from correct rollouts");
  aggregate->add_option("--corpus", corpus, "problem corpus (JSONL)")->required();
  aggregate->add_option("--rollouts", rollouts, "rollouts (JSONL)")->required();
  aggregate->add_option("--out", out, "rubric store directory")->required();
  aggregate->add_option("--judge", judge_path, "judge config (JSON); default is the mock judge");
  aggregate->add_option("--verifier", verifier_path, "verifier config (JSON)");
  aggregate->add_option("--min-correct", agg.min_correct, "correct rollouts required")->capture_default_str();
  aggregate->add_option("--rollouts-per-problem", agg.rollouts_per_problem, "rollouts considered (K)")
      ->capture_default_str();
  aggregate->add_option("--max-trajectories", agg.max_trajectories_in_prompt, "trajectories shown to the judge")
      ->capture_default_str();
  aggregate->add_option("--min-criteria", agg.min_criteria)->capture_default_str();
  aggregate->add_option("--max-criteria", agg.max_criteria)->capture_default_str();
  aggregate->add_option("--concurrency", agg.concurrency)->capture_default_str();
  aggregate->add_option("--created-at", agg.created_at, "timestamp for new sets (default: now, UTC)");

  auto* stats = app.add_subcommand("stats", "rubric corpus statistics");
  stats->add_option("--rubrics", rubrics, "rubric store directory")->required();
  stats->add_option("--corpus", corpus, "problem corpus (JSONL)")->required();

  auto* serve = app.add_subcommand("serve", "run the reward service");
  serve->add_option("--config", config, "service config file")->required();
  serve->add_option("--port", port, "override the configured port (0 picks a free one)");

  auto* reload = app.add_subcommand("reload-rubrics", "ask a running service to reload its rubric store");
  reload->add_option("--url", url, "service base URL, e.g. http://127.0.0.1:8080/v1")->required();
  reload->add_option("--token-env", token_env, "variable holding the shared token")->capture_default_str();

  auto* score = app.add_subcommand("score", "send one /v1/score request body");
  score->add_option("--url", url, "service base URL")->required();
  score->add_option("--in", in_path, "request body (JSON)")->required();
  score->add_option("--out", out, "response path (default stdout)");
  score->add_option("--token-env", token_env)->capture_default_str();

  auto* sandbox = app.add_subcommand("sandbox", "GRPO sandbox on synthetic tasks");
  sandbox->require_subcommand(1);
  ar::sandbox::ExperimentConfig exp;
  std::string kl = "exact_categorical";
  double lambda = 0.5;
  std::uint64_t seed = 7;
  auto* run = sandbox->add_subcommand("run", "train once and write the trace");
  run->add_option("--lambda", lambda)->capture_default_str();
  run->add_option("--seed", seed)->capture_default_str();
  run->add_option("--out", out, "trace path (JSONL)");
  add_train_options(run, exp, kl);

  std::string lambdas = "1.0,0.5";
  std::size_t n_seeds = 5;
  std::uint64_t first_seed = 1;
  auto* compare = sandbox->add_subcommand("compare", "paired runs over lambdas and seeds");
  compare->add_option("--lambdas", lambdas)->capture_default_str();
  compare->add_option("--seeds", n_seeds, "number of seeds")->capture_default_str();
  compare->add_option("--first-seed", first_seed)->capture_default_str();
  compare->add_option("--out", out, "directory for traces and summary.json");
  add_train_options(compare, exp, kl);

  std::vector<std::string> traces, labels;
  auto* plot = sandbox->add_subcommand("plot", "render traces as SVG");
  plot->add_option("--trace", traces, "trace file (repeatable)")->required();
  plot->add_option("--label", labels, "series label (repeatable)");
  plot->add_option("--out", out, "SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    exp.train.surrogate.kl_estimator = ar::reward::parse_kl_estimator(kl);
    if (*aggregate) return cmd_aggregate(corpus, rollouts, out, judge_path, agg, verifier_path);
    if (*stats) return cmd_stats(rubrics, corpus);
    if (*serve) return cmd_serve(config, port);
    if (*reload) return cmd_reload(url, token_env);
    if (*score) return cmd_score(url, in_path, out, token_env);
    if (*run) return cmd_sandbox_run(lambda, seed, exp, out);
    if (*compare) return cmd_sandbox_compare(lambdas, n_seeds, first_seed, exp, out);
    if (*plot) return cmd_sandbox_plot(traces, labels, out);
  } catch (const ar::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
