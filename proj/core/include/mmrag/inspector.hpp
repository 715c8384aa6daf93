#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/gateway.hpp"
#include "mmrag/rerank.hpp"

namespace mmrag {

enum class Decision { kPass, kFail };
enum class Route { kGenerator, kInternal, kFallback };

std::string_view to_string(Decision decision);
std::string_view to_string(Route route);
std::optional<Decision> decision_from_string(std::string_view name);
std::optional<Route> route_from_string(std::string_view name);

/// Parsed inspector verdict. parse_ok means the verdict is actionable:
/// either a truthy "pass", or a falsy "pass" accompanied by an "answer"
/// string (so a parsed FAIL always carries the internal answer).
struct InspectionResult {
  Decision decision = Decision::kFail;
  std::optional<std::string> internal_answer;
  bool parse_ok = false;
  std::string raw_text;
};

/// Reads the first JSON object embedded in the text. "pass" is accepted
/// as a boolean or a case-insensitive "true"/"false" string; anything
/// else (no object, no readable "pass", falsy verdict without an answer)
/// yields parse_ok=false with decision FAIL. Total over arbitrary bytes.
InspectionResult parse_inspection(std::string_view text);

struct AnswerRecord {
  std::string answer;
  Route route = Route::kFallback;
  std::string question;
  std::uint64_t context_entry_id = 0;
  Decision inspector_decision = Decision::kFail;
  /// Route degraded below the PASS/FAIL contract (unparseable verdict or
  /// generator failure); `diagnostic` carries the single-line reason.
  bool degraded = false;
  std::string diagnostic;
};

/// Decoupled answer routing: PASS sends (question, context) to the
/// text-only generator; a parsed FAIL answers with the inspector's
/// internal answer; an unparseable verdict (or a generator failure on the
/// PASS path) falls back to surfacing the raw inspector text, flagged.
AnswerRecord decide_and_route(const std::optional<std::string>& image_ref,
                              const std::string& question,
                              const RerankedContext& context, Gateway& gateway,
                              TemplateId generator_template);

struct RoutingConfusion {
  std::size_t tp = 0;  // predicted PASS, gold PASS
  std::size_t fp = 0;  // predicted PASS, gold FAIL
  std::size_t fn = 0;  // predicted FAIL, gold PASS
  std::size_t tn = 0;  // predicted FAIL, gold FAIL

  std::size_t total() const { return tp + fp + fn + tn; }
  double accuracy() const;
};

/// Errors on empty or length-mismatched inputs.
RoutingConfusion routing_confusion(std::span<const Decision> predicted,
                                   std::span<const Decision> gold);

/// Inputs for deriving an inspector training label from retrieval
/// outcomes. Section-annotated records (gold_section_id) take the
/// top1-equality rule; entity-annotated records take the dual criterion
/// (entity retrieved AND the zero-shot generator answer matches gold
/// under relaxed accuracy).
struct InspectorLabelInput {
  std::optional<std::string> gold_section_id;
  std::optional<std::string> gold_entity;
  std::vector<std::string> gold_answers;
  std::string top1_section_id;
  std::vector<std::string> retrieved_entities;
  std::optional<std::string> generator_answer;
};

struct InspectorLabel {
  Decision decision = Decision::kFail;
  /// FAIL labels carry the gold answer as the supervision target.
  std::optional<std::string> target_answer;
};

/// Errors with "unlabelable" when the record has neither gold source.
InspectorLabel label_inspector_sample(const InspectorLabelInput& input);

}  // namespace mmrag
