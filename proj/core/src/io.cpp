#include "mmrag/io.hpp"

#include <functional>

#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"
#include "mmrag/format.hpp"

namespace mmrag {

namespace {

using nlohmann::json;

std::vector<JsonlDiagnostic> for_each_jsonl(
    std::istream& in, const std::function<void(std::size_t, const json&)>& fn) {
  std::vector<JsonlDiagnostic> diagnostics;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json object = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (object.is_discarded() || !object.is_object()) {
      diagnostics.push_back({line_number,
                             "line " + std::to_string(line_number) + ": invalid JSON"});
      continue;
    }
    try {
      fn(line_number, object);
    } catch (const std::exception& e) {
      diagnostics.push_back(
          {line_number, "line " + std::to_string(line_number) + ": " + e.what()});
    }
  }
  return diagnostics;
}

std::optional<std::string> opt_string(const json& object, const char* key) {
  if (!object.contains(key) || object[key].is_null()) return std::nullopt;
  return object[key].get<std::string>();
}

std::vector<std::string> string_list(const json& object, const char* key) {
  std::vector<std::string> out;
  if (!object.contains(key)) return out;
  for (const json& v : object.at(key)) out.push_back(v.get<std::string>());
  return out;
}

std::optional<Decision> opt_decision(const json& object, const char* key) {
  const auto text = opt_string(object, key);
  if (!text.has_value()) return std::nullopt;
  const auto decision = decision_from_string(*text);
  if (!decision.has_value()) {
    throw Error("parse", std::string(key) + " must be PASS or FAIL");
  }
  return decision;
}

QueryRecord parse_query_record(const json& object) {
  QueryRecord record;
  if (!object.contains("question") || !object["question"].is_string() ||
      object["question"].get<std::string>().empty()) {
    throw Error("parse", "record needs a non-empty 'question'");
  }
  record.question = object["question"].get<std::string>();
  record.image_ref = opt_string(object, "image_ref");
  record.gold_answers = string_list(object, "gold_answers");
  record.gold_entity = opt_string(object, "gold_entity");
  record.gold_section_id = opt_string(object, "gold_section_id");
  record.gold_route = opt_decision(object, "gold_route");
  return record;
}

json retrieved_to_json(const RetrievedItem& item) {
  return json{{"entry_id", item.entry_id}, {"score", item.score},
              {"entity_id", item.entity_id}, {"article_id", item.article_id},
              {"section_id", item.section_id}, {"text", item.text}};
}

RetrievedItem retrieved_from_json(const json& object) {
  RetrievedItem item;
  item.entry_id = object.at("entry_id").get<std::uint64_t>();
  item.score = object.at("score").get<double>();
  item.entity_id = object.value("entity_id", "");
  item.article_id = object.value("article_id", "");
  item.section_id = object.value("section_id", "");
  item.text = object.value("text", "");
  return item;
}

json context_to_json(const RerankedContext& context) {
  return json{{"entry_id", context.entry_id},   {"article_id", context.article_id},
              {"section_id", context.section_id}, {"text", context.section_text},
              {"stage1_score", context.stage1_score},
              {"stage2_score", context.stage2_score}};
}

RerankedContext context_from_json(const json& object) {
  RerankedContext context;
  context.entry_id = object.at("entry_id").get<std::uint64_t>();
  context.article_id = object.value("article_id", "");
  context.section_id = object.value("section_id", "");
  context.section_text = object.value("text", "");
  context.stage1_score = object.value("stage1_score", 0.0);
  context.stage2_score = object.value("stage2_score", 0.0);
  return context;
}

EvalRecord parse_eval_record(const json& object) {
  EvalRecord record;
  const QueryRecord query = parse_query_record(object);
  record.question = query.question;
  record.image_ref = query.image_ref;
  record.gold_answers = query.gold_answers;
  record.gold_entity = query.gold_entity;
  record.gold_section_id = query.gold_section_id;
  record.gold_route = query.gold_route;

  record.refined_question = opt_string(object, "refined_question");
  if (object.contains("retrieved")) {
    for (const json& item : object["retrieved"]) {
      record.retrieved.push_back(retrieved_from_json(item));
    }
  }
  if (object.contains("context") && !object["context"].is_null()) {
    record.context = context_from_json(object["context"]);
  }
  if (object.contains("stage1_trace")) {
    record.stage1_trace = object["stage1_trace"].get<std::vector<double>>();
  }
  if (object.contains("stage2_trace")) {
    record.stage2_trace = object["stage2_trace"].get<std::vector<double>>();
  }
  record.rerank_degraded = object.value("rerank_degraded", false);
  record.predicted_answer = opt_string(object, "predicted_answer");
  if (const auto route_text = opt_string(object, "route")) {
    const auto route = route_from_string(*route_text);
    if (!route.has_value()) throw Error("parse", "unknown route tag");
    record.route = route;
  }
  record.inspector_decision = opt_decision(object, "inspector_decision");
  record.answer_degraded = object.value("answer_degraded", false);
  if (object.contains("retrieval_ms")) {
    record.retrieval_ms = object["retrieval_ms"].get<double>();
  }
  if (object.contains("inference_ms")) {
    record.inference_ms = object["inference_ms"].get<double>();
  }
  return record;
}

json eval_record_to_json(const EvalRecord& record) {
  json object;
  object["question"] = record.question;
  if (record.image_ref) object["image_ref"] = *record.image_ref;
  if (!record.gold_answers.empty()) object["gold_answers"] = record.gold_answers;
  if (record.gold_entity) object["gold_entity"] = *record.gold_entity;
  if (record.gold_section_id) object["gold_section_id"] = *record.gold_section_id;
  if (record.gold_route) object["gold_route"] = std::string(to_string(*record.gold_route));
  if (record.refined_question) object["refined_question"] = *record.refined_question;
  if (!record.retrieved.empty()) {
    json retrieved = json::array();
    for (const RetrievedItem& item : record.retrieved) {
      retrieved.push_back(retrieved_to_json(item));
    }
    object["retrieved"] = std::move(retrieved);
  }
  if (record.context) object["context"] = context_to_json(*record.context);
  if (!record.stage1_trace.empty()) object["stage1_trace"] = record.stage1_trace;
  if (!record.stage2_trace.empty()) object["stage2_trace"] = record.stage2_trace;
  if (record.rerank_degraded) object["rerank_degraded"] = true;
  if (record.predicted_answer) object["predicted_answer"] = *record.predicted_answer;
  if (record.route) object["route"] = std::string(to_string(*record.route));
  if (record.inspector_decision) {
    object["inspector_decision"] = std::string(to_string(*record.inspector_decision));
  }
  if (record.answer_degraded) object["answer_degraded"] = true;
  if (record.retrieval_ms) object["retrieval_ms"] = *record.retrieval_ms;
  if (record.inference_ms) object["inference_ms"] = *record.inference_ms;
  return object;
}

}  // namespace

QueryFile read_query_records(std::istream& in) {
  QueryFile file;
  file.diagnostics = for_each_jsonl(in, [&](std::size_t, const json& object) {
    file.records.push_back(parse_query_record(object));
  });
  return file;
}

EvalFile read_eval_records(std::istream& in) {
  EvalFile file;
  file.diagnostics = for_each_jsonl(in, [&](std::size_t, const json& object) {
    file.records.push_back(parse_eval_record(object));
  });
  return file;
}

void write_eval_records(std::ostream& out, std::span<const EvalRecord> records) {
  for (const EvalRecord& record : records) {
    out << eval_record_to_json(record).dump() << '\n';
  }
}

RolloutFile read_rollout_records(std::istream& in) {
  RolloutFile file;
  file.diagnostics = for_each_jsonl(in, [&](std::size_t, const json& object) {
    RolloutRecord record;
    if (!object.contains("raw_text") || !object["raw_text"].is_string()) {
      throw Error("parse", "rollout needs 'raw_text'");
    }
    record.raw_text = object["raw_text"].get<std::string>();
    if (!object.contains("gold_entity") || !object["gold_entity"].is_string() ||
        object["gold_entity"].get<std::string>().empty()) {
      throw Error("parse", "rollout needs a non-empty 'gold_entity'");
    }
    record.gold_entity = object["gold_entity"].get<std::string>();
    record.image_ref = opt_string(object, "image_ref");
    file.records.push_back(std::move(record));
  });
  return file;
}

void write_scored_rollouts(std::ostream& out, std::span<const ScoredRollout> rollouts) {
  for (const ScoredRollout& rollout : rollouts) {
    json object;
    object["well_formed"] = rollout.well_formed;
    if (rollout.refined_query) object["refined_query"] = *rollout.refined_query;
    object["format_reward"] = rollout.reward.format_reward;
    object["retrieval_reward"] = rollout.reward.retrieval_reward;
    object["total"] = rollout.reward.total;
    if (rollout.reward.hit_rank) object["hit_rank"] = *rollout.reward.hit_rank;
    out << object.dump() << '\n';
  }
}

void write_entry_meta_jsonl(std::ostream& out, std::span<const KbEntry> entries) {
  for (const KbEntry& entry : entries) {
    const json object = {{"entry_id", entry.entry_id},
                         {"entity_id", entry.entity_id},
                         {"article_id", entry.article_id},
                         {"section_id", entry.section_id},
                         {"image_ref", entry.image_ref},
                         {"section_text", entry.section_text}};
    out << object.dump() << '\n';
  }
}

std::string metrics_report_json(const MetricsReport& report) {
  json object;
  json recall = json::object();
  for (const auto& [k, rate] : report.recall_at) {
    recall[std::to_string(k)] = rate;
  }
  json pseudo = json::object();
  for (const auto& [k, rate] : report.pseudo_recall_at) {
    pseudo[std::to_string(k)] = rate;
  }
  object["recall_at"] = std::move(recall);
  object["pseudo_recall_at"] = std::move(pseudo);
  object["vqa_standard"] = report.vqa_standard;
  object["vqa_relaxed"] = report.vqa_relaxed;
  if (report.routing) {
    object["routing"] = {{"tp", report.routing->tp}, {"fp", report.routing->fp},
                         {"fn", report.routing->fn}, {"tn", report.routing->tn},
                         {"accuracy", report.routing->accuracy()}};
  }
  if (report.latency) {
    object["latency"] = {{"mean_retrieval_ms", report.latency->mean_retrieval_ms},
                         {"mean_inference_ms", report.latency->mean_inference_ms},
                         {"timed_records", report.latency->timed_records}};
  }
  return object.dump(2) + "\n";
}

std::string metrics_report_csv(const MetricsReport& report) {
  std::string csv = "metric,value\n";
  for (const auto& [k, rate] : report.recall_at) {
    csv += "R@" + std::to_string(k) + "," + format_double(rate) + "\n";
  }
  for (const auto& [k, rate] : report.pseudo_recall_at) {
    csv += "PR@" + std::to_string(k) + "," + format_double(rate) + "\n";
  }
  csv += "vqa_standard," + format_double(report.vqa_standard) + "\n";
  csv += "vqa_relaxed," + format_double(report.vqa_relaxed) + "\n";
  if (report.routing) {
    csv += "routing_tp," + std::to_string(report.routing->tp) + "\n";
    csv += "routing_fp," + std::to_string(report.routing->fp) + "\n";
    csv += "routing_fn," + std::to_string(report.routing->fn) + "\n";
    csv += "routing_tn," + std::to_string(report.routing->tn) + "\n";
    csv += "routing_accuracy," + format_double(report.routing->accuracy()) + "\n";
  }
  if (report.latency) {
    csv += "mean_retrieval_ms," + format_double(report.latency->mean_retrieval_ms) + "\n";
    csv += "mean_inference_ms," + format_double(report.latency->mean_inference_ms) + "\n";
  }
  return csv;
}

std::string train_curve_csv(std::span<const TrainStepStats> curve) {
  std::string csv = "step,mean_reward,objective,kl\n";
  for (const TrainStepStats& stats : curve) {
    csv += std::to_string(stats.step) + "," + format_double(stats.mean_reward) +
           "," + format_double(stats.objective) + "," + format_double(stats.kl) +
           "\n";
  }
  return csv;
}

std::string policy_json(const ToyPolicy& policy, double sample_temperature) {
  json object;
  object["action_names"] = policy.action_names;
  object["logits"] = policy.logits;
  object["probabilities"] = policy.probabilities(sample_temperature);
  object["sample_temperature"] = sample_temperature;
  return object.dump(2) + "\n";
}

}  // namespace mmrag
