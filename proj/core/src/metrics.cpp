#include "mmrag/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mmrag/error.hpp"
#include "mmrag/rng.hpp"
#include "mmrag/text.hpp"

namespace mmrag {

namespace {

bool gold_in_topk(const EvalRecord& record, std::size_t k) {
  const std::size_t depth = std::min(k, record.retrieved.size());
  if (record.gold_entity.has_value()) {
    for (std::size_t i = 0; i < depth; ++i) {
      if (record.retrieved[i].entity_id == *record.gold_entity) return true;
    }
    return false;
  }
  for (std::size_t i = 0; i < depth; ++i) {
    if (record.retrieved[i].section_id == *record.gold_section_id) return true;
  }
  return false;
}

}  // namespace

double recall_at_k(std::span<const EvalRecord> records, std::size_t k) {
  if (k < 1) throw Error("config_invalid", "recall_at_k requires k >= 1");
  if (records.empty()) throw Error("empty_input", "recall over zero records");
  std::size_t hits = 0;
  for (const EvalRecord& record : records) {
    if (!record.gold_entity.has_value() && !record.gold_section_id.has_value()) {
      throw Error("missing_gold",
                  "record lacks both gold_entity and gold_section_id");
    }
    if (gold_in_topk(record, k)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double pseudo_recall_at_k(std::span<const EvalRecord> records, std::size_t k) {
  if (k < 1) throw Error("config_invalid", "pseudo_recall_at_k requires k >= 1");
  if (records.empty()) throw Error("empty_input", "pseudo recall over zero records");
  std::size_t hits = 0;
  for (const EvalRecord& record : records) {
    if (record.gold_answers.empty()) {
      throw Error("missing_gold", "record lacks gold_answers");
    }
    std::vector<std::string> needles;
    needles.reserve(record.gold_answers.size());
    for (const std::string& answer : record.gold_answers) {
      needles.push_back(normalize_whitespace_lower(answer));
    }
    const std::size_t depth = std::min(k, record.retrieved.size());
    bool hit = false;
    for (std::size_t i = 0; i < depth && !hit; ++i) {
      const std::string passage =
          normalize_whitespace_lower(record.retrieved[i].text);
      for (const std::string& needle : needles) {
        if (!needle.empty() && passage.find(needle) != std::string::npos) {
          hit = true;
          break;
        }
      }
    }
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double vqa_accuracy(std::span<const EvalRecord> records, AccuracyMode mode) {
  if (records.empty()) throw Error("empty_input", "accuracy over zero records");
  std::size_t correct = 0;
  for (const EvalRecord& record : records) {
    if (!record.predicted_answer.has_value()) continue;
    for (const std::string& gold : record.gold_answers) {
      if (answers_match(*record.predicted_answer, gold, mode)) {
        ++correct;
        break;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

LatencyStats latency_report(std::span<const EvalRecord> records) {
  LatencyStats stats;
  double retrieval_sum = 0.0, inference_sum = 0.0;
  std::size_t retrieval_n = 0, inference_n = 0;
  for (const EvalRecord& record : records) {
    bool timed = false;
    if (record.retrieval_ms.has_value()) {
      retrieval_sum += *record.retrieval_ms;
      ++retrieval_n;
      timed = true;
    }
    if (record.inference_ms.has_value()) {
      inference_sum += *record.inference_ms;
      ++inference_n;
      timed = true;
    }
    if (timed) ++stats.timed_records;
  }
  if (stats.timed_records == 0) {
    throw Error("no_timed_records", "no record carries stage timings");
  }
  if (retrieval_n > 0) stats.mean_retrieval_ms = retrieval_sum / retrieval_n;
  if (inference_n > 0) stats.mean_inference_ms = inference_sum / inference_n;
  return stats;
}

MetricsReport compute_metrics(std::span<const EvalRecord> records,
                              std::span<const std::size_t> ks) {
  MetricsReport report;
  for (const std::size_t k : ks) {
    report.recall_at[k] = recall_at_k(records, k);
    report.pseudo_recall_at[k] = pseudo_recall_at_k(records, k);
  }
  report.vqa_standard = vqa_accuracy(records, AccuracyMode::kStandard);
  report.vqa_relaxed = vqa_accuracy(records, AccuracyMode::kRelaxed);

  std::vector<Decision> predicted, gold;
  for (const EvalRecord& record : records) {
    if (record.gold_route.has_value() && record.inspector_decision.has_value()) {
      predicted.push_back(*record.inspector_decision);
      gold.push_back(*record.gold_route);
    }
  }
  if (!predicted.empty()) {
    report.routing = routing_confusion(predicted, gold);
  }

  bool any_timed = false;
  for (const EvalRecord& record : records) {
    if (record.retrieval_ms.has_value() || record.inference_ms.has_value()) {
      any_timed = true;
      break;
    }
  }
  if (any_timed) report.latency = latency_report(records);
  return report;
}

std::size_t snr_gold_count(double ratio, std::size_t slots) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error("config_invalid", "snr ratio must lie in [0,1]");
  }
  return static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(slots)));
}

std::vector<std::string> mix_snr_context(std::span<const std::string> gold_sections,
                                         std::span<const std::string> distractor_pool,
                                         double ratio, std::size_t slots,
                                         std::uint64_t seed) {
  const std::size_t gold_needed = snr_gold_count(ratio, slots);
  const std::size_t distractors_needed = slots - gold_needed;
  if (gold_sections.size() < gold_needed) {
    throw Error("insufficient_pool",
                "gold pool has " + std::to_string(gold_sections.size()) +
                    " sections, need " + std::to_string(gold_needed));
  }
  if (distractor_pool.size() < distractors_needed) {
    throw Error("insufficient_pool",
                "distractor pool has " + std::to_string(distractor_pool.size()) +
                    " sections, need " + std::to_string(distractors_needed));
  }

  SplitMix64 rng(seed);
  std::vector<std::string> context;
  context.reserve(slots);
  for (const std::size_t i :
       sample_without_replacement(gold_sections.size(), gold_needed, rng)) {
    context.push_back(gold_sections[i]);
  }
  for (const std::size_t i : sample_without_replacement(
           distractor_pool.size(), distractors_needed, rng)) {
    context.push_back(distractor_pool[i]);
  }
  deterministic_shuffle(context, rng);
  return context;
}

}  // namespace mmrag
