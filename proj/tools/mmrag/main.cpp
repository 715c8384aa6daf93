// Operator entry point: wires the pipeline modules into subcommands over
// one JSON config with per-dataset profiles. Precedence: flag > config
// file > profile default. Every command exits 0 on success and prints a
// single machine-parseable JSON error line to stderr on failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"
#include "mmrag/io.hpp"
#include "mmrag/kb_builder.hpp"
#include "mmrag/pipeline.hpp"
#include "mmrag/pipeline_config.hpp"
#include "mmrag/stub_server.hpp"
#include "mmrag/sweep.hpp"
#include "mmrag/toy_env.hpp"

namespace {

using mmrag::Error;

struct GlobalOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> profile;
  std::optional<std::uint64_t> seed;

  // Per-command overrides; applied when set.
  std::optional<double> alpha;
  std::optional<double> beta1;
  std::optional<double> beta2;
  std::optional<long long> k;
};

mmrag::PipelineConfig resolve_config(const GlobalOptions& options) {
  mmrag::PipelineConfig cfg =
      options.config_path.has_value()
          ? mmrag::load_pipeline_config(*options.config_path, options.profile)
          : mmrag::profile_defaults(options.profile.value_or("evqa"));
  if (options.seed.has_value()) {
    cfg.gateway.stub_seed = *options.seed;
    cfg.grpo.seed = *options.seed;
  }
  if (options.alpha.has_value()) cfg.fusion.alpha = *options.alpha;
  if (options.beta1.has_value()) cfg.weights.beta1 = *options.beta1;
  if (options.beta2.has_value()) cfg.weights.beta2 = *options.beta2;
  if (options.k.has_value()) {
    if (*options.k < 1) {
      throw Error("config_invalid", "retrieval_k must be >= 1");
    }
    cfg.retrieval_k = static_cast<std::size_t>(*options.k);
  }
  mmrag::validate(cfg);
  return cfg;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  return out;
}

void report_diagnostics(const std::vector<mmrag::JsonlDiagnostic>& diagnostics) {
  for (const mmrag::JsonlDiagnostic& d : diagnostics) {
    std::cerr << "diagnostic: " << d.message << "\n";
  }
}

int cmd_build_kb(const GlobalOptions& options, const std::string& in_path,
                 const std::string& out_path, std::string meta_path) {
  const mmrag::PipelineConfig cfg = resolve_config(options);
  const auto gateway = mmrag::make_gateway(cfg.gateway);

  std::ifstream in = open_input(in_path);
  mmrag::KbBuildResult result;
  const mmrag::VectorIndex index =
      mmrag::build_kb_index(in, cfg.kb_build, *gateway, cfg.fusion, &result);
  index.save(out_path);

  if (meta_path.empty()) meta_path = out_path + ".meta.jsonl";
  std::ofstream meta = open_output(meta_path);
  mmrag::write_entry_meta_jsonl(meta, result.entries);

  for (const mmrag::KbBuildDiagnostic& d : result.diagnostics) {
    std::cerr << "diagnostic: " << d.message << "\n";
  }
  const nlohmann::json summary = {{"entries", index.size()},
                                  {"malformed_lines", result.malformed_lines},
                                  {"gateway_failures", result.gateway_failures},
                                  {"index", out_path},
                                  {"meta", meta_path}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_retrieve(const GlobalOptions& options, const std::string& index_path,
                 const std::string& query_path, const std::string& out_path,
                 bool refine, bool timings) {
  const mmrag::PipelineConfig cfg = resolve_config(options);
  const auto gateway = mmrag::make_gateway(cfg.gateway);
  const mmrag::VectorIndex index = mmrag::VectorIndex::load(index_path);
  const mmrag::PipelineRunner runner(cfg, index, *gateway);

  std::ifstream in = open_input(query_path);
  const mmrag::QueryFile queries = mmrag::read_query_records(in);
  report_diagnostics(queries.diagnostics);

  mmrag::PipelineOptions pipeline_options;
  pipeline_options.refine = refine;
  pipeline_options.timings = timings;

  std::vector<mmrag::EvalRecord> records;
  records.reserve(queries.records.size());
  for (const mmrag::QueryRecord& query : queries.records) {
    records.push_back(runner.retrieve(query, cfg.retrieval_k, pipeline_options));
  }
  std::ofstream out = open_output(out_path);
  mmrag::write_eval_records(out, records);
  return 0;
}

int cmd_rerank(const GlobalOptions& options, const std::string& index_path,
               const std::string& candidates_path, const std::string& out_path) {
  const mmrag::PipelineConfig cfg = resolve_config(options);
  const auto gateway = mmrag::make_gateway(cfg.gateway);
  const mmrag::VectorIndex index = mmrag::VectorIndex::load(index_path);
  const mmrag::PipelineRunner runner(cfg, index, *gateway);

  std::ifstream in = open_input(candidates_path);
  mmrag::EvalFile file = mmrag::read_eval_records(in);
  report_diagnostics(file.diagnostics);
  for (mmrag::EvalRecord& record : file.records) {
    runner.rerank(record);
  }
  std::ofstream out = open_output(out_path);
  mmrag::write_eval_records(out, file.records);
  return 0;
}

int cmd_answer(const GlobalOptions& options, const std::string& contexts_path,
               const std::string& out_path, bool timings) {
  const mmrag::PipelineConfig cfg = resolve_config(options);
  const auto gateway = mmrag::make_gateway(cfg.gateway);

  std::ifstream in = open_input(contexts_path);
  mmrag::EvalFile file = mmrag::read_eval_records(in);
  report_diagnostics(file.diagnostics);

  for (mmrag::EvalRecord& record : file.records) {
    if (!record.context.has_value()) {
      throw Error("context_missing", "record lacks a reranked context");
    }
    const auto start = std::chrono::steady_clock::now();
    const mmrag::AnswerRecord routed =
        mmrag::decide_and_route(record.image_ref, record.question,
                                *record.context, *gateway, cfg.generator_template);
    record.predicted_answer = routed.answer;
    record.route = routed.route;
    record.inspector_decision = routed.inspector_decision;
    record.answer_degraded = routed.degraded;
    if (timings) {
      record.inference_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count();
    }
  }
  std::ofstream out = open_output(out_path);
  mmrag::write_eval_records(out, file.records);
  return 0;
}

int cmd_evaluate(const std::string& records_path, const std::string& ks_text,
                 const std::string& out_json, const std::string& out_csv) {
  std::vector<std::size_t> ks;
  {
    std::string token;
    std::istringstream stream(ks_text);
    while (std::getline(stream, token, ',')) {
      if (token.empty()) continue;
      const long long value = std::stoll(token);
      if (value < 1) throw Error("config_invalid", "--ks values must be >= 1");
      ks.push_back(static_cast<std::size_t>(value));
    }
  }
  if (ks.empty()) throw Error("config_invalid", "--ks must list at least one depth");

  std::ifstream in = open_input(records_path);
  const mmrag::EvalFile file = mmrag::read_eval_records(in);
  report_diagnostics(file.diagnostics);
  const mmrag::MetricsReport report = mmrag::compute_metrics(file.records, ks);

  const std::string json_text = mmrag::metrics_report_json(report);
  if (out_json.empty()) {
    std::cout << json_text;
  } else {
    open_output(out_json) << json_text;
  }
  if (!out_csv.empty()) {
    open_output(out_csv) << mmrag::metrics_report_csv(report);
  }
  return 0;
}

int cmd_reward_check(const GlobalOptions& options, const std::string& index_path,
                     const std::string& rollouts_path, const std::string& out_path) {
  const mmrag::PipelineConfig cfg = resolve_config(options);
  const auto gateway = mmrag::make_gateway(cfg.gateway);
  const mmrag::VectorIndex index = mmrag::VectorIndex::load(index_path);
  const mmrag::PipelineRunner runner(cfg, index, *gateway);

  std::ifstream in = open_input(rollouts_path);
  const mmrag::RolloutFile file = mmrag::read_rollout_records(in);
  report_diagnostics(file.diagnostics);

  std::vector<mmrag::ScoredRollout> scored;
  scored.reserve(file.records.size());
  for (const mmrag::RolloutRecord& rollout : file.records) {
    const mmrag::RefinerOutput output = mmrag::parse_refiner_output(rollout.raw_text);
    mmrag::ScoredRollout row;
    row.well_formed = output.well_formed;
    row.refined_query = output.refined_query;
    if (output.well_formed) {
      // Fetch extra sections so the entity dedup still reaches the full
      // reward depth when entities span several sections each.
      const std::size_t fetch = std::min<std::size_t>(
          index.size(), static_cast<std::size_t>(cfg.reward_depth) * 5);
      const mmrag::EmbeddingVector query_vec =
          runner.encode_query(*output.refined_query, rollout.image_ref);
      std::vector<std::string> entities;
      for (const mmrag::ScoredCandidate& c : index.search_topk(query_vec, fetch)) {
        entities.push_back(index.entry_meta(c.entry_id).entity_id);
      }
      const std::optional<int> rank =
          mmrag::entity_hit_rank(entities, rollout.gold_entity, cfg.reward_depth);
      row.reward = mmrag::total_reward(output, rank);
    } else {
      row.reward = mmrag::total_reward(output, std::nullopt);
    }
    scored.push_back(std::move(row));
  }
  std::ofstream out = open_output(out_path);
  mmrag::write_scored_rollouts(out, scored);
  return 0;
}

int cmd_grpo_train_toy(const GlobalOptions& options, const std::string& env_path,
                       const std::string& curve_path, const std::string& policy_path,
                       std::optional<long long> steps, std::optional<double> lr) {
  mmrag::PipelineConfig cfg = resolve_config(options);
  if (steps.has_value()) cfg.grpo.steps = static_cast<int>(*steps);
  if (lr.has_value()) cfg.grpo.learning_rate = *lr;
  mmrag::validate(cfg.grpo);

  const mmrag::TemplateRewriteEnv env(mmrag::load_toy_env_spec(env_path),
                                      cfg.gateway.stub_seed, cfg.gateway.d_text,
                                      cfg.reward_depth);
  const mmrag::TrainResult result = mmrag::train_toy_policy(env, cfg.grpo);

  open_output(curve_path) << mmrag::train_curve_csv(result.curve);
  open_output(policy_path)
      << mmrag::policy_json(result.policy, cfg.grpo.sample_temperature);

  double final_mean = 0.0;
  const std::size_t tail = std::min<std::size_t>(50, result.curve.size());
  for (std::size_t i = result.curve.size() - tail; i < result.curve.size(); ++i) {
    final_mean += result.curve[i].mean_reward;
  }
  if (tail > 0) final_mean /= static_cast<double>(tail);
  const nlohmann::json summary = {{"steps", result.curve.size()},
                                  {"tail_mean_reward", final_mean},
                                  {"curve", curve_path},
                                  {"policy", policy_path}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_sweep(const GlobalOptions& options, const std::string& grid_path,
              const std::string& index_path, const std::string& queries_path,
              const std::string& out_path) {
  const mmrag::PipelineConfig cfg = resolve_config(options);
  const auto gateway = mmrag::make_gateway(cfg.gateway);
  const mmrag::VectorIndex index = mmrag::VectorIndex::load(index_path);

  std::ifstream in = open_input(queries_path);
  const mmrag::QueryFile queries = mmrag::read_query_records(in);
  report_diagnostics(queries.diagnostics);

  const mmrag::SweepGrid grid = mmrag::load_sweep_grid(grid_path);
  const std::string csv =
      mmrag::run_sweep(grid, cfg, queries.records, index, *gateway);
  open_output(out_path) << csv;
  return 0;
}

int cmd_serve_stub(const GlobalOptions& options, const std::string& host, int port,
                   int delay_ms) {
  const mmrag::PipelineConfig cfg = resolve_config(options);
  mmrag::StubServer::Options server_options;
  server_options.seed = cfg.gateway.stub_seed;
  server_options.d_vis = cfg.gateway.d_vis;
  server_options.d_text = cfg.gateway.d_text;
  server_options.request_delay_ms = delay_ms;
  if (!cfg.gateway.auth_token_env_var.empty()) {
    if (const char* token = std::getenv(cfg.gateway.auth_token_env_var.c_str())) {
      server_options.auth_token = token;
    }
  }
  mmrag::StubServer server(server_options);
  std::cerr << "stub server listening on " << host << ":" << port << "\n";
  server.run(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-modal retrieval-augmented generation pipeline"};
  app.require_subcommand(1);

  GlobalOptions options;
  app.add_option("--config", options.config_path, "pipeline config JSON");
  app.add_option("--profile", options.profile, "dataset profile: evqa | infoseek");
  app.add_option("--seed", options.seed, "seed for all randomness");

  // build-kb
  std::string in_path, out_path, meta_path;
  CLI::App* build_kb = app.add_subcommand("build-kb", "build a sealed index from sections JSONL");
  build_kb->add_option("--in", in_path, "RawSection JSONL")->required();
  build_kb->add_option("--out", out_path, "output index file")->required();
  build_kb->add_option("--meta", meta_path, "sidecar metadata JSONL (default: <out>.meta.jsonl)");

  // retrieve
  std::string index_path, query_path, retrieve_out;
  bool refine = false, timings = false;
  CLI::App* retrieve = app.add_subcommand("retrieve", "top-k retrieval for query records");
  retrieve->add_option("--index", index_path, "index file")->required();
  retrieve->add_option("--query", query_path, "query JSONL")->required();
  retrieve->add_option("--k", options.k, "retrieval depth");
  retrieve->add_option("--alpha", options.alpha, "query modality weight");
  retrieve->add_option("--out", retrieve_out, "output JSONL")->required();
  retrieve->add_flag("--refine", refine, "rewrite questions through the refiner first");
  retrieve->add_flag("--timings", timings, "record stage timings (non-deterministic)");

  // rerank
  std::string candidates_path, rerank_out, rerank_index;
  CLI::App* rerank = app.add_subcommand("rerank", "two-stage rerank of retrieved candidates");
  rerank->add_option("--candidates", candidates_path, "retrieve output JSONL")->required();
  rerank->add_option("--index", rerank_index, "index file")->required();
  rerank->add_option("--beta1", options.beta1, "retrieval/multimodal fusion weight");
  rerank->add_option("--beta2", options.beta2, "stage1/textual fusion weight");
  rerank->add_option("--out", rerank_out, "output JSONL")->required();

  // answer
  std::string contexts_path, answer_out;
  bool answer_timings = false;
  CLI::App* answer = app.add_subcommand("answer", "inspect contexts and route answers");
  answer->add_option("--contexts", contexts_path, "rerank output JSONL")->required();
  answer->add_option("--out", answer_out, "output JSONL")->required();
  answer->add_flag("--timings", answer_timings, "record stage timings (non-deterministic)");

  // evaluate
  std::string records_path, ks_text = "1,5,10,20", eval_json, eval_csv;
  CLI::App* evaluate = app.add_subcommand("evaluate", "compute the metrics report");
  evaluate->add_option("--records", records_path, "answer output JSONL")->required();
  evaluate->add_option("--ks", ks_text, "comma-separated recall depths");
  evaluate->add_option("--out-json", eval_json, "report JSON path (default: stdout)");
  evaluate->add_option("--out-csv", eval_csv, "report CSV path");

  // reward-check
  std::string rollouts_path, reward_out, reward_index;
  CLI::App* reward_check = app.add_subcommand("reward-check", "score refiner rollouts");
  reward_check->add_option("--rollouts", rollouts_path, "rollout JSONL")->required();
  reward_check->add_option("--index", reward_index, "index file")->required();
  reward_check->add_option("--out", reward_out, "output JSONL")->required();

  // grpo-train-toy
  std::string env_path, curve_path = "curve.csv", policy_path = "policy.json";
  std::optional<long long> train_steps;
  std::optional<double> train_lr;
  CLI::App* train = app.add_subcommand("grpo-train-toy", "train the toy rewrite policy");
  train->add_option("--env", env_path, "environment spec JSON")->required();
  train->add_option("--out-curve", curve_path, "per-step curve CSV");
  train->add_option("--out-policy", policy_path, "final policy JSON");
  train->add_option("--steps", train_steps, "training steps");
  train->add_option("--lr", train_lr, "learning rate");

  // sweep
  std::string grid_path, sweep_index, sweep_queries, sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter grid sweep");
  sweep->add_option("--grid", grid_path, "grid JSON")->required();
  sweep->add_option("--index", sweep_index, "index file")->required();
  sweep->add_option("--queries", sweep_queries, "query JSONL")->required();
  sweep->add_option("--out", sweep_out, "sweep CSV")->required();

  // serve-stub
  std::string host = "127.0.0.1";
  int port = 8089, delay_ms = 0;
  CLI::App* serve = app.add_subcommand("serve-stub", "run the deterministic stub model server");
  serve->add_option("--port", port, "listen port")->required();
  serve->add_option("--host", host, "bind host");
  serve->add_option("--delay-ms", delay_ms, "artificial per-request delay");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build_kb->parsed()) return cmd_build_kb(options, in_path, out_path, meta_path);
    if (retrieve->parsed()) {
      return cmd_retrieve(options, index_path, query_path, retrieve_out, refine, timings);
    }
    if (rerank->parsed()) return cmd_rerank(options, rerank_index, candidates_path, rerank_out);
    if (answer->parsed()) return cmd_answer(options, contexts_path, answer_out, answer_timings);
    if (evaluate->parsed()) return cmd_evaluate(records_path, ks_text, eval_json, eval_csv);
    if (reward_check->parsed()) {
      return cmd_reward_check(options, reward_index, rollouts_path, reward_out);
    }
    if (train->parsed()) {
      return cmd_grpo_train_toy(options, env_path, curve_path, policy_path,
                                train_steps, train_lr);
    }
    if (sweep->parsed()) return cmd_sweep(options, grid_path, sweep_index, sweep_queries, sweep_out);
    if (serve->parsed()) return cmd_serve_stub(options, host, port, delay_ms);
  } catch (const Error& e) {
    std::cerr << nlohmann::json({{"error", e.code()}, {"message", e.what()}}).dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json({{"error", "internal"}, {"message", e.what()}}).dump()
              << "\n";
    return 1;
  }
  return 0;
}
