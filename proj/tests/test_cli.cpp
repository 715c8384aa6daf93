#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "support/test_util.hpp"

using mmrag::test::CommandResult;
using mmrag::test::TempDir;
using mmrag::test::cli_path;
using mmrag::test::read_file;
using mmrag::test::run_command;
using mmrag::test::write_file;

namespace {

// 8 articles x 2 sections; each first section starts with the gold answer
// clause and repeats enough body tokens to stay in the PASSTHROUGH class.
std::string sections_fixture() {
  std::ostringstream out;
  for (int a = 0; a < 8; ++a) {
    std::string body;
    for (int w = 0; w < 40; ++w) body += " body" + std::to_string(a);
    out << R"({"article_id":"A)" << a << R"(","article_title":"Title )" << a
        << R"(","article_abstract":"Abstract for article )" << a
        << R"(.","section_id":"A)" << a << R"(#s0","section_title":"Main","text":"answer-)"
        << a << R"( is the value. topic)" << a << body
        << R"(","image_ref":"img-)" << a << R"(","entity_id":"E)" << a << "\"}\n";
    out << R"({"article_id":"A)" << a << R"(","article_title":"Title )" << a
        << R"(","article_abstract":"Abstract for article )" << a
        << R"(.","section_id":"A)" << a
        << R"(#s1","section_title":"Details","text":"extra details topic)" << a << body
        << R"(","image_ref":"img-)" << a << R"(","entity_id":"E)" << a << "\"}\n";
  }
  return out.str();
}

std::string queries_fixture() {
  std::ostringstream out;
  for (int a = 0; a < 8; ++a) {
    out << R"({"question":"what is topic)" << a << R"( about","image_ref":"img-)"
        << a << R"(","gold_answers":["answer-)" << a
        << R"( is the value"],"gold_entity":"E)" << a << R"(","gold_section_id":"A)"
        << a << R"(#s0","gold_route":"PASS"})" << "\n";
  }
  return out.str();
}

struct PipelineArtifacts {
  std::string index_summary;
  std::string candidates;
  std::string contexts;
  std::string answers;
  std::string report_json;
  std::string report_csv;
};

PipelineArtifacts run_pipeline(const TempDir& tmp, const std::string& tag) {
  const std::string cli = cli_path();
  const std::string dir = tmp.file(tag).string();
  std::filesystem::create_directories(dir);
  write_file(dir + "/sections.jsonl", sections_fixture());
  write_file(dir + "/q.jsonl", queries_fixture());

  PipelineArtifacts artifacts;
  CommandResult r = run_command(cli + " --seed 7 build-kb --in " + dir +
                                "/sections.jsonl --out " + dir + "/idx.bin");
  REQUIRE(r.exit_code == 0);
  artifacts.index_summary = r.output;

  r = run_command(cli + " --seed 7 retrieve --index " + dir + "/idx.bin --query " +
                  dir + "/q.jsonl --k 5 --out " + dir + "/c.jsonl");
  REQUIRE(r.exit_code == 0);

  r = run_command(cli + " --seed 7 rerank --candidates " + dir +
                  "/c.jsonl --index " + dir + "/idx.bin --out " + dir + "/r.jsonl");
  REQUIRE(r.exit_code == 0);

  r = run_command(cli + " --seed 7 answer --contexts " + dir + "/r.jsonl --out " +
                  dir + "/a.jsonl");
  REQUIRE(r.exit_code == 0);

  r = run_command(cli + " evaluate --records " + dir + "/a.jsonl --ks 1,5,10 " +
                  "--out-json " + dir + "/rep.json --out-csv " + dir + "/rep.csv");
  REQUIRE(r.exit_code == 0);

  artifacts.candidates = read_file(dir + "/c.jsonl");
  artifacts.contexts = read_file(dir + "/r.jsonl");
  artifacts.answers = read_file(dir + "/a.jsonl");
  artifacts.report_json = read_file(dir + "/rep.json");
  artifacts.report_csv = read_file(dir + "/rep.csv");
  return artifacts;
}

}  // namespace

TEST_CASE("full stub pipeline is byte-identical across runs") {
  TempDir tmp("cli_determinism");
  const PipelineArtifacts first = run_pipeline(tmp, "run1");
  const PipelineArtifacts second = run_pipeline(tmp, "run2");
  CHECK(first.candidates == second.candidates);
  CHECK(first.contexts == second.contexts);
  CHECK(first.answers == second.answers);
  CHECK(first.report_json == second.report_json);
  CHECK(first.report_csv == second.report_csv);
  CHECK_FALSE(first.report_json.empty());

  // recall monotonicity on the bundled fixture
  const std::string& json = first.report_json;
  const auto rate_of = [&](const std::string& key) {
    const std::size_t at = json.find("\"" + key + "\"");
    REQUIRE(at != std::string::npos);
    return std::stod(json.substr(json.find(':', at) + 1));
  };
  const std::size_t recall_block = json.find("\"recall_at\"");
  REQUIRE(recall_block != std::string::npos);
  CHECK(rate_of("1") <= rate_of("5"));
  CHECK(rate_of("5") <= rate_of("10"));
}

TEST_CASE("different seed changes the stub space") {
  TempDir tmp("cli_seed");
  const std::string cli = cli_path();
  const std::string dir = tmp.path().string();
  write_file(dir + "/sections.jsonl", sections_fixture());
  REQUIRE(run_command(cli + " --seed 7 build-kb --in " + dir +
                      "/sections.jsonl --out " + dir + "/a.bin")
              .exit_code == 0);
  REQUIRE(run_command(cli + " --seed 8 build-kb --in " + dir +
                      "/sections.jsonl --out " + dir + "/b.bin")
              .exit_code == 0);
  CHECK(read_file(dir + "/a.bin") != read_file(dir + "/b.bin"));
}

TEST_CASE("retrieve with k=0 fails with a config error naming retrieval_k") {
  TempDir tmp("cli_k0");
  const std::string dir = tmp.path().string();
  write_file(dir + "/sections.jsonl", sections_fixture());
  write_file(dir + "/q.jsonl", queries_fixture());
  const std::string cli = cli_path();
  REQUIRE(run_command(cli + " build-kb --in " + dir + "/sections.jsonl --out " +
                      dir + "/idx.bin")
              .exit_code == 0);
  const CommandResult r =
      run_command(cli + " retrieve --index " + dir + "/idx.bin --query " + dir +
                  "/q.jsonl --k 0 --out " + dir + "/c.jsonl");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("config_invalid") != std::string::npos);
  CHECK(r.output.find("retrieval_k") != std::string::npos);
  CHECK(r.output.find("{\"error\"") != std::string::npos);  // machine-parseable line
}

TEST_CASE("unknown flag and unreadable file fail nonzero") {
  const std::string cli = cli_path();
  CHECK(run_command(cli + " retrieve --no-such-flag").exit_code != 0);
  const CommandResult r = run_command(
      cli + " evaluate --records /nonexistent/path.jsonl --ks 1");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("\"error\"") != std::string::npos);
}

TEST_CASE("build-kb isolates malformed lines: 4 entries + 1 diagnostic") {
  TempDir tmp("cli_malformed");
  const std::string dir = tmp.path().string();
  std::istringstream all(sections_fixture());
  std::string line, five_lines;
  std::vector<std::string> lines;
  while (std::getline(all, line)) lines.push_back(line);
  five_lines = lines[0] + "\n" + "{broken json\n" + lines[2] + "\n" + lines[4] +
               "\n" + lines[6] + "\n";
  write_file(dir + "/sections.jsonl", five_lines);

  const CommandResult r = run_command(cli_path() + " build-kb --in " + dir +
                                      "/sections.jsonl --out " + dir + "/idx.bin");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"entries\":4") != std::string::npos);
  CHECK(r.output.find("\"malformed_lines\":1") != std::string::npos);
  CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("reward-check scores rollouts against the index") {
  TempDir tmp("cli_reward");
  const std::string dir = tmp.path().string();
  write_file(dir + "/sections.jsonl", sections_fixture());
  const std::string cli = cli_path();
  REQUIRE(run_command(cli + " --seed 7 build-kb --in " + dir +
                      "/sections.jsonl --out " + dir + "/idx.bin")
              .exit_code == 0);

  std::ostringstream rollouts;
  rollouts
      << R"({"raw_text":"<think>t</think><answer>{\"query\":\"topic3 body3 details\"}</answer>","gold_entity":"E3","image_ref":"img-3"})"
      << "\n"
      << R"({"raw_text":"<think>no answer tag","gold_entity":"E3"})" << "\n";
  write_file(dir + "/rollouts.jsonl", rollouts.str());

  const CommandResult r =
      run_command(cli + " --seed 7 reward-check --rollouts " + dir +
                  "/rollouts.jsonl --index " + dir + "/idx.bin --out " + dir +
                  "/rewards.jsonl");
  REQUIRE(r.exit_code == 0);
  const std::string rewards = read_file(dir + "/rewards.jsonl");
  std::istringstream stream(rewards);
  std::string line1, line2;
  std::getline(stream, line1);
  std::getline(stream, line2);
  CHECK(line1.find("\"well_formed\":true") != std::string::npos);
  CHECK(line1.find("\"format_reward\":1.0") != std::string::npos);
  CHECK(line1.find("\"hit_rank\":1") != std::string::npos);
  CHECK(line1.find("\"total\":5.0") != std::string::npos);
  CHECK(line2.find("\"well_formed\":false") != std::string::npos);
  CHECK(line2.find("\"format_reward\":-4.0") != std::string::npos);
  CHECK(line2.find("\"retrieval_reward\":-2.5") != std::string::npos);
  CHECK(line2.find("\"total\":-6.5") != std::string::npos);
}

TEST_CASE("grpo-train-toy emits deterministic curve and policy files") {
  TempDir tmp("cli_grpo");
  const std::string dir = tmp.path().string();
  std::ostringstream env;
  env << R"({"templates":[{"name":"echo","pattern":"{query}"},)"
      << R"({"name":"broken","pattern":"{query}","malformed":true}],)"
      << R"("queries":[{"text":"gold document text alpha beta","gold_entity":"GOLD"}],)"
      << R"("documents":[{"entity_id":"GOLD","text":"gold document text alpha beta"},)"
      << R"({"entity_id":"D1","text":"unrelated filler one"},)"
      << R"({"entity_id":"D2","text":"unrelated filler two"}]})";
  write_file(dir + "/env.json", env.str());

  const std::string cli = cli_path();
  const std::string command = cli + " --seed 3 grpo-train-toy --env " + dir +
                              "/env.json --steps 40 --out-curve " + dir +
                              "/curve.csv --out-policy " + dir + "/policy.json";
  REQUIRE(run_command(command).exit_code == 0);
  const std::string curve = read_file(dir + "/curve.csv");
  const std::string policy = read_file(dir + "/policy.json");
  CHECK(curve.rfind("step,mean_reward,objective,kl\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 41);
  CHECK(policy.find("\"action_names\"") != std::string::npos);
  CHECK(policy.find("echo") != std::string::npos);

  const std::string command2 = cli + " --seed 3 grpo-train-toy --env " + dir +
                               "/env.json --steps 40 --out-curve " + dir +
                               "/curve2.csv --out-policy " + dir + "/policy2.json";
  REQUIRE(run_command(command2).exit_code == 0);
  CHECK(read_file(dir + "/curve2.csv") == curve);
  CHECK(read_file(dir + "/policy2.json") == policy);
}

TEST_CASE("sweep writes the fixed-header CSV deterministically") {
  TempDir tmp("cli_sweep");
  const std::string dir = tmp.path().string();
  write_file(dir + "/sections.jsonl", sections_fixture());
  write_file(dir + "/q.jsonl", queries_fixture());
  write_file(dir + "/grid.json", R"({"alpha": [0.0, 1.0], "beta1": [0.6, 1.0]})");

  const std::string cli = cli_path();
  REQUIRE(run_command(cli + " --seed 7 build-kb --in " + dir +
                      "/sections.jsonl --out " + dir + "/idx.bin")
              .exit_code == 0);
  const std::string command = cli + " --seed 7 sweep --grid " + dir +
                              "/grid.json --index " + dir + "/idx.bin --queries " +
                              dir + "/q.jsonl --out " + dir + "/sweep.csv";
  REQUIRE(run_command(command).exit_code == 0);
  const std::string csv = read_file(dir + "/sweep.csv");
  CHECK(csv.rfind("alpha,beta1,beta2,k,R@1,R@5,R@10,R@20,PR@5,PR@20,vqa_std,vqa_relaxed\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 grid points

  REQUIRE(run_command(cli + " --seed 7 sweep --grid " + dir + "/grid.json --index " +
                      dir + "/idx.bin --queries " + dir + "/q.jsonl --out " + dir +
                      "/sweep2.csv")
              .exit_code == 0);
  CHECK(read_file(dir + "/sweep2.csv") == csv);

  write_file(dir + "/empty_grid.json", "{}");
  const CommandResult bad = run_command(
      cli + " sweep --grid " + dir + "/empty_grid.json --index " + dir +
      "/idx.bin --queries " + dir + "/q.jsonl --out " + dir + "/x.csv");
  CHECK(bad.exit_code != 0);
  CHECK(bad.output.find("empty_grid") != std::string::npos);
}

TEST_CASE("answer --timings adds latency fields that evaluate reports") {
  TempDir tmp("cli_timings");
  const std::string dir = tmp.path().string();
  write_file(dir + "/sections.jsonl", sections_fixture());
  write_file(dir + "/q.jsonl", queries_fixture());
  const std::string cli = cli_path();
  REQUIRE(run_command(cli + " --seed 7 build-kb --in " + dir +
                      "/sections.jsonl --out " + dir + "/idx.bin")
              .exit_code == 0);
  REQUIRE(run_command(cli + " --seed 7 retrieve --index " + dir +
                      "/idx.bin --query " + dir + "/q.jsonl --k 5 --timings --out " +
                      dir + "/c.jsonl")
              .exit_code == 0);
  REQUIRE(run_command(cli + " --seed 7 rerank --candidates " + dir +
                      "/c.jsonl --index " + dir + "/idx.bin --out " + dir +
                      "/r.jsonl")
              .exit_code == 0);
  REQUIRE(run_command(cli + " --seed 7 answer --contexts " + dir +
                      "/r.jsonl --timings --out " + dir + "/a.jsonl")
              .exit_code == 0);
  const CommandResult r =
      run_command(cli + " evaluate --records " + dir + "/a.jsonl --ks 1,5");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("mean_retrieval_ms") != std::string::npos);
  CHECK(r.output.find("mean_inference_ms") != std::string::npos);
}
