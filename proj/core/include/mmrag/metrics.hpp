#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmrag/answer_match.hpp"
#include "mmrag/inspector.hpp"
#include "mmrag/rerank.hpp"

namespace mmrag {

/// One retrieved candidate with the identity fields the metrics need.
struct RetrievedItem {
  std::uint64_t entry_id = 0;
  double score = 0.0;
  std::string entity_id;
  std::string article_id;
  std::string section_id;
  std::string text;
};

/// The pipeline's per-question record: retrieval fills `retrieved span`,
/// rerank fills `context` (+ traces), answer fills the prediction/route
/// fields, evaluate reads everything.
struct EvalRecord {
  std::string question;
  std::optional<std::string> image_ref;
  std::vector<std::string> gold_answers;
  std::optional<std::string> gold_entity;
  std::optional<std::string> gold_section_id;
  std::optional<Decision> gold_route;

  std::optional<std::string> refined_question;
  std::vector<RetrievedItem> retrieved;  // score-descending

  std::optional<RerankedContext> context;
  std::vector<double> stage1_trace;
  std::vector<double> stage2_trace;
  bool rerank_degraded = false;

  std::optional<std::string> predicted_answer;
  std::optional<Route> route;
  std::optional<Decision> inspector_decision;
  bool answer_degraded = false;

  std::optional<double> retrieval_ms;
  std::optional<double> inference_ms;
};

/// Fraction of records whose gold identity (entity when gold_entity is
/// set, else section) appears in the top-k retrieved. Every record must
/// carry one of the two gold fields; k >= 1.
double recall_at_k(std::span<const EvalRecord> records, std::size_t k);

/// Fraction of records where any top-k passage contains any gold answer
/// as a case-insensitive substring after whitespace normalization.
double pseudo_recall_at_k(std::span<const EvalRecord> records, std::size_t k);

/// Share of records whose predicted answer matches any gold answer under
/// the given mode. Records without a prediction count as misses.
double vqa_accuracy(std::span<const EvalRecord> records, AccuracyMode mode);

struct LatencyStats {
  double mean_retrieval_ms = 0.0;
  double mean_inference_ms = 0.0;
  std::size_t timed_records = 0;
};

/// Arithmetic means over records carrying timings; errors when none do.
LatencyStats latency_report(std::span<const EvalRecord> records);

struct MetricsReport {
  std::map<std::size_t, double> recall_at;
  std::map<std::size_t, double> pseudo_recall_at;
  double vqa_standard = 0.0;
  double vqa_relaxed = 0.0;
  std::optional<RoutingConfusion> routing;  // needs gold + predicted decisions
  std::optional<LatencyStats> latency;      // needs timed records
};

MetricsReport compute_metrics(std::span<const EvalRecord> records,
                              std::span<const std::size_t> ks);

/// round(ratio * slots) gold sections + distractors for the rest, both
/// sampled without replacement, order shuffled; deterministic under seed.
/// Errors when either pool is too small.
std::vector<std::string> mix_snr_context(std::span<const std::string> gold_sections,
                                         std::span<const std::string> distractor_pool,
                                         double ratio, std::size_t slots,
                                         std::uint64_t seed);

/// Gold-slot count used by mix_snr_context (round half away from zero).
std::size_t snr_gold_count(double ratio, std::size_t slots);

}  // namespace mmrag
