#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmrag/error.hpp"
#include "mmrag/inspector.hpp"
#include "support/test_util.hpp"

using namespace mmrag;

namespace {

// Chat returns scripted texts in order; first call is the inspector, the
// second (if any) the generator.
class ScriptedChatGateway final : public Gateway {
 public:
  explicit ScriptedChatGateway(std::vector<std::string> replies)
      : replies_(std::move(replies)) {}

  std::string chat(const ChatRequest&) override {
    if (next_ >= replies_.size()) {
      throw GatewayError("gateway_timeout", "no scripted reply left");
    }
    return replies_[next_++];
  }
  EmbeddingVector embed_text(const std::string&) override {
    throw GatewayError("gateway_timeout", "unused");
  }
  EmbeddingVector embed_image(const std::string&) override {
    throw GatewayError("gateway_timeout", "unused");
  }
  std::vector<double> rerank(const std::string&,
                             const std::vector<std::string>&) override {
    throw GatewayError("gateway_timeout", "unused");
  }

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

RerankedContext context() {
  return RerankedContext{5, "art", "s1", "The tower was completed in 1785.", 0.9, 0.8};
}

}  // namespace

TEST_CASE("parse_inspection: canonical verdicts") {
  const InspectionResult pass = parse_inspection(R"({"pass": "true"})");
  CHECK(pass.decision == Decision::kPass);
  CHECK(pass.parse_ok);

  const InspectionResult fail =
      parse_inspection(R"({"pass": "false", "answer": "Paris"})");
  CHECK(fail.decision == Decision::kFail);
  CHECK(fail.parse_ok);
  CHECK(fail.internal_answer == "Paris");

  const InspectionResult prose = parse_inspection("I think the context is fine.");
  CHECK_FALSE(prose.parse_ok);
  CHECK(prose.decision == Decision::kFail);
  CHECK(prose.raw_text == "I think the context is fine.");
}

TEST_CASE("parse_inspection: boolean and case-insensitive forms") {
  CHECK(parse_inspection(R"({"pass": true})").decision == Decision::kPass);
  CHECK(parse_inspection(R"({"pass": "TRUE"})").decision == Decision::kPass);
  CHECK(parse_inspection(R"({"pass": "False", "answer": "x"})").parse_ok);
  CHECK(parse_inspection(R"({"pass": false, "answer": "x"})").decision ==
        Decision::kFail);
}

TEST_CASE("parse_inspection: tolerant of chatter and extra keys") {
  const InspectionResult result = parse_inspection(
      "Sure! Here is my verdict:\n"
      R"({"confidence": 0.9, "pass": "true", "note": "looks good"} trailing)");
  CHECK(result.parse_ok);
  CHECK(result.decision == Decision::kPass);
}

TEST_CASE("parse_inspection: degraded shapes stay FAIL / parse_ok=false") {
  // falsy verdict without an answer is not actionable
  CHECK_FALSE(parse_inspection(R"({"pass": "false"})").parse_ok);
  // unrecognized pass value
  CHECK_FALSE(parse_inspection(R"({"pass": "maybe"})").parse_ok);
  CHECK_FALSE(parse_inspection(R"({"pass": 1})").parse_ok);
  // object without pass
  CHECK_FALSE(parse_inspection(R"({"answer": "x"})").parse_ok);
  // broken JSON
  CHECK_FALSE(parse_inspection(R"({"pass": )").parse_ok);
}

TEST_CASE("parse_inspection: invariant FAIL+parse_ok implies an answer") {
  SplitMix64 rng(67);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string bytes;
    const std::size_t len = rng.next_below(100);
    for (std::size_t i = 0; i < len; ++i) {
      bytes.push_back(static_cast<char>(rng.next_below(256)));
    }
    if (trial % 2 == 0) bytes.insert(0, "{\"pass\":");
    if (trial % 3 == 0) bytes += "}";
    const InspectionResult result = parse_inspection(bytes);  // must not throw
    if (result.decision == Decision::kFail && result.parse_ok) {
      CHECK(result.internal_answer.has_value());
    }
  }
}

TEST_CASE("routing: PASS goes to the generator") {
  ScriptedChatGateway gateway({R"({"pass": "true"})", "1785"});
  const AnswerRecord record = decide_and_route(
      std::nullopt, "when was it built", context(), gateway, TemplateId::kGeneratorEvqa);
  CHECK(record.route == Route::kGenerator);
  CHECK(record.answer == "1785");
  CHECK(record.inspector_decision == Decision::kPass);
  CHECK_FALSE(record.degraded);
  CHECK(record.context_entry_id == 5);
}

TEST_CASE("routing: FAIL uses the internal answer") {
  ScriptedChatGateway gateway({R"({"pass": "false", "answer": "blue whale"})"});
  const AnswerRecord record = decide_and_route(
      std::nullopt, "what animal", context(), gateway, TemplateId::kGeneratorEvqa);
  CHECK(record.route == Route::kInternal);
  CHECK(record.answer == "blue whale");
  CHECK(record.inspector_decision == Decision::kFail);
  CHECK_FALSE(record.degraded);
}

TEST_CASE("routing: prose verdict falls back, flagged") {
  ScriptedChatGateway gateway({"The context seems fine to me."});
  const AnswerRecord record = decide_and_route(
      std::nullopt, "q", context(), gateway, TemplateId::kGeneratorEvqa);
  CHECK(record.route == Route::kFallback);
  CHECK(record.degraded);
  CHECK(record.answer == "The context seems fine to me.");
}

TEST_CASE("routing: generator failure on the PASS path falls back") {
  ScriptedChatGateway gateway({R"({"pass": "true"})"});  // no generator reply
  const AnswerRecord record = decide_and_route(
      std::nullopt, "q", context(), gateway, TemplateId::kGeneratorEvqa);
  CHECK(record.route == Route::kFallback);
  CHECK(record.degraded);
  CHECK(record.inspector_decision == Decision::kPass);
  CHECK(record.diagnostic.find("generator") != std::string::npos);
}

TEST_CASE("routing: exactly one route per query") {
  const std::vector<std::string> verdicts = {
      R"({"pass": "true"})",
      R"({"pass": "false", "answer": "a"})",
      "chatter",
  };
  for (const std::string& verdict : verdicts) {
    ScriptedChatGateway gateway({verdict, "gen answer"});
    const AnswerRecord record = decide_and_route(
        std::nullopt, "q", context(), gateway, TemplateId::kGeneratorEvqa);
    const bool generator = record.route == Route::kGenerator;
    const bool internal = record.route == Route::kInternal;
    const bool fallback = record.route == Route::kFallback;
    CHECK(static_cast<int>(generator) + static_cast<int>(internal) +
              static_cast<int>(fallback) ==
          1);
    CHECK((record.route == Route::kGenerator) ==
          (record.inspector_decision == Decision::kPass && !record.degraded));
  }
}

TEST_CASE("routing_confusion: published confusion matrix cells") {
  std::vector<Decision> predicted, gold;
  const auto add = [&](Decision p, Decision g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      predicted.push_back(p);
      gold.push_back(g);
    }
  };
  add(Decision::kPass, Decision::kPass, 1274);
  add(Decision::kPass, Decision::kFail, 264);
  add(Decision::kFail, Decision::kPass, 586);
  add(Decision::kFail, Decision::kFail, 2626);

  const RoutingConfusion confusion = routing_confusion(predicted, gold);
  CHECK(confusion.tp == 1274);
  CHECK(confusion.fp == 264);
  CHECK(confusion.fn == 586);
  CHECK(confusion.tn == 2626);
  CHECK(confusion.total() == 4750);
  CHECK(confusion.accuracy() == doctest::Approx(0.821052631578947).epsilon(1e-12));
  CHECK(std::abs(confusion.accuracy() - 0.821) < 0.0005);
}

TEST_CASE("routing_confusion: degenerate cases") {
  const std::vector<Decision> p1 = {Decision::kPass};
  const std::vector<Decision> g1 = {Decision::kFail};
  const RoutingConfusion one = routing_confusion(p1, g1);
  CHECK(one.fp == 1);
  CHECK(one.accuracy() == 0.0);

  const std::vector<Decision> all = {Decision::kPass, Decision::kFail};
  CHECK(routing_confusion(all, all).accuracy() == 1.0);

  CHECK_THROWS_AS(routing_confusion(p1, all), Error);
  CHECK_THROWS_AS(routing_confusion(std::vector<Decision>{}, std::vector<Decision>{}),
                  Error);
}

TEST_CASE("label_inspector_sample: section-annotated rule") {
  InspectorLabelInput input;
  input.gold_section_id = "s-gold";
  input.gold_answers = {"42"};
  input.top1_section_id = "s-gold";
  CHECK(label_inspector_sample(input).decision == Decision::kPass);

  input.top1_section_id = "s-other";
  const InspectorLabel fail = label_inspector_sample(input);
  CHECK(fail.decision == Decision::kFail);
  CHECK(fail.target_answer == "42");
}

TEST_CASE("label_inspector_sample: entity-annotated dual criterion") {
  InspectorLabelInput input;
  input.gold_entity = "E9";
  input.gold_answers = {"100 meters"};
  input.retrieved_entities = {"E1", "E9", "E3"};

  SUBCASE("entity hit + relaxed-correct answer passes") {
    input.generator_answer = "105";  // 5% off "100" under relaxed numeric match
    input.gold_answers = {"100"};
    CHECK(label_inspector_sample(input).decision == Decision::kPass);
  }
  SUBCASE("entity hit but wrong answer fails") {
    input.generator_answer = "7";
    const InspectorLabel label = label_inspector_sample(input);
    CHECK(label.decision == Decision::kFail);
    CHECK(label.target_answer == "100 meters");
  }
  SUBCASE("entity miss fails regardless of the answer") {
    input.retrieved_entities = {"E1", "E3"};
    input.generator_answer = "100 meters";
    CHECK(label_inspector_sample(input).decision == Decision::kFail);
  }
  SUBCASE("missing generator answer fails") {
    input.generator_answer = std::nullopt;
    CHECK(label_inspector_sample(input).decision == Decision::kFail);
  }
}

TEST_CASE("label_inspector_sample: unlabelable record errors") {
  InspectorLabelInput input;
  input.top1_section_id = "s1";
  CHECK_THROWS_WITH_AS(label_inspector_sample(input),
                       doctest::Contains("neither"), Error);
}
