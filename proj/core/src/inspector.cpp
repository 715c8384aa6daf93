#include "mmrag/inspector.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "mmrag/answer_match.hpp"
#include "mmrag/error.hpp"
#include "mmrag/text.hpp"

namespace mmrag {

namespace {

using nlohmann::json;

// First balanced {...} span in the text, string- and escape-aware.
std::optional<std::string_view> first_json_object(std::string_view text) {
  const std::size_t start = text.find('{');
  if (start == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
      if (depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

// truthy / falsy / unrecognized
enum class PassValue { kTrue, kFalse, kUnknown };

PassValue read_pass(const json& object) {
  if (!object.contains("pass")) return PassValue::kUnknown;
  const json& v = object["pass"];
  if (v.is_boolean()) return v.get<bool>() ? PassValue::kTrue : PassValue::kFalse;
  if (v.is_string()) {
    const std::string s = ascii_lower(v.get<std::string>());
    if (s == "true") return PassValue::kTrue;
    if (s == "false") return PassValue::kFalse;
  }
  return PassValue::kUnknown;
}

}  // namespace

std::string_view to_string(Decision decision) {
  return decision == Decision::kPass ? "PASS" : "FAIL";
}

std::string_view to_string(Route route) {
  switch (route) {
    case Route::kGenerator: return "GENERATOR";
    case Route::kInternal: return "INTERNAL";
    case Route::kFallback: return "FALLBACK";
  }
  return "?";
}

std::optional<Decision> decision_from_string(std::string_view name) {
  if (name == "PASS") return Decision::kPass;
  if (name == "FAIL") return Decision::kFail;
  return std::nullopt;
}

std::optional<Route> route_from_string(std::string_view name) {
  if (name == "GENERATOR") return Route::kGenerator;
  if (name == "INTERNAL") return Route::kInternal;
  if (name == "FALLBACK") return Route::kFallback;
  return std::nullopt;
}

InspectionResult parse_inspection(std::string_view text) {
  InspectionResult result;
  result.raw_text = std::string(text);

  const auto span = first_json_object(text);
  if (!span) return result;
  const json object = json::parse(*span, nullptr, /*allow_exceptions=*/false);
  if (object.is_discarded() || !object.is_object()) return result;

  std::optional<std::string> answer;
  if (object.contains("answer") && object["answer"].is_string()) {
    answer = object["answer"].get<std::string>();
  }

  switch (read_pass(object)) {
    case PassValue::kTrue:
      result.decision = Decision::kPass;
      result.parse_ok = true;
      result.internal_answer = std::move(answer);
      break;
    case PassValue::kFalse:
      result.decision = Decision::kFail;
      if (answer.has_value() && !answer->empty()) {
        // A parsed FAIL must carry the internal answer.
        result.parse_ok = true;
        result.internal_answer = std::move(answer);
      }
      break;
    case PassValue::kUnknown:
      break;
  }
  return result;
}

AnswerRecord decide_and_route(const std::optional<std::string>& image_ref,
                              const std::string& question,
                              const RerankedContext& context, Gateway& gateway,
                              TemplateId generator_template) {
  AnswerRecord record;
  record.question = question;
  record.context_entry_id = context.entry_id;

  const std::string verdict_text = gateway.chat_template(
      TemplateId::kInspector,
      {{"Query", question}, {"Context", context.section_text}},
      /*temperature=*/0.0, image_ref);
  const InspectionResult verdict = parse_inspection(verdict_text);
  record.inspector_decision = verdict.decision;

  if (!verdict.parse_ok) {
    record.route = Route::kFallback;
    record.answer = verdict.raw_text;
    record.degraded = true;
    record.diagnostic = "inspector verdict unparseable";
    return record;
  }

  if (verdict.decision == Decision::kFail) {
    record.route = Route::kInternal;
    record.answer = *verdict.internal_answer;
    return record;
  }

  try {
    record.answer = gateway.chat_template(
        generator_template,
        {{"Context", context.section_text}, {"Question", question}});
    record.route = Route::kGenerator;
  } catch (const GatewayError& e) {
    record.route = Route::kFallback;
    record.answer = verdict.raw_text;
    record.degraded = true;
    record.diagnostic = std::string("generator failed: ") + e.what();
  }
  return record;
}

double RoutingConfusion::accuracy() const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  return static_cast<double>(tp + tn) / static_cast<double>(n);
}

RoutingConfusion routing_confusion(std::span<const Decision> predicted,
                                   std::span<const Decision> gold) {
  if (predicted.size() != gold.size()) {
    throw Error("dim_mismatch", "predicted and gold decision counts differ");
  }
  if (predicted.empty()) {
    throw Error("empty_input", "routing confusion over zero decisions");
  }
  RoutingConfusion confusion;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool pred_pass = predicted[i] == Decision::kPass;
    const bool gold_pass = gold[i] == Decision::kPass;
    if (pred_pass && gold_pass) ++confusion.tp;
    if (pred_pass && !gold_pass) ++confusion.fp;
    if (!pred_pass && gold_pass) ++confusion.fn;
    if (!pred_pass && !gold_pass) ++confusion.tn;
  }
  return confusion;
}

InspectorLabel label_inspector_sample(const InspectorLabelInput& input) {
  InspectorLabel label;
  const auto fail_target = [&]() -> std::optional<std::string> {
    if (input.gold_answers.empty()) return std::nullopt;
    return input.gold_answers.front();
  };

  if (input.gold_section_id.has_value()) {
    const bool pass = input.top1_section_id == *input.gold_section_id;
    label.decision = pass ? Decision::kPass : Decision::kFail;
    if (!pass) label.target_answer = fail_target();
    return label;
  }

  if (input.gold_entity.has_value()) {
    const bool entity_hit =
        std::find(input.retrieved_entities.begin(), input.retrieved_entities.end(),
                  *input.gold_entity) != input.retrieved_entities.end();
    bool answer_ok = false;
    if (input.generator_answer.has_value()) {
      for (const std::string& gold : input.gold_answers) {
        if (answers_match(*input.generator_answer, gold, AccuracyMode::kRelaxed)) {
          answer_ok = true;
          break;
        }
      }
    }
    const bool pass = entity_hit && answer_ok;
    label.decision = pass ? Decision::kPass : Decision::kFail;
    if (!pass) label.target_answer = fail_target();
    return label;
  }

  throw Error("unlabelable",
              "record carries neither gold_section_id nor gold_entity");
}

}  // namespace mmrag
