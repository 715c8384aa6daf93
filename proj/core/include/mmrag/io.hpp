#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mmrag/grpo.hpp"
#include "mmrag/kb_builder.hpp"
#include "mmrag/metrics.hpp"
#include "mmrag/pipeline.hpp"
#include "mmrag/refiner.hpp"

namespace mmrag {

struct JsonlDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct QueryFile {
  std::vector<QueryRecord> records;
  std::vector<JsonlDiagnostic> diagnostics;
};
QueryFile read_query_records(std::istream& in);

struct EvalFile {
  std::vector<EvalRecord> records;
  std::vector<JsonlDiagnostic> diagnostics;
};
EvalFile read_eval_records(std::istream& in);
void write_eval_records(std::ostream& out, std::span<const EvalRecord> records);

/// Refiner rollout to score in batch: raw model text plus the gold entity
/// (and optionally the query image for multimodal retrieval).
struct RolloutRecord {
  std::string raw_text;
  std::string gold_entity;
  std::optional<std::string> image_ref;
};
struct RolloutFile {
  std::vector<RolloutRecord> records;
  std::vector<JsonlDiagnostic> diagnostics;
};
RolloutFile read_rollout_records(std::istream& in);

struct ScoredRollout {
  bool well_formed = false;
  std::optional<std::string> refined_query;
  RewardRecord reward;
};
void write_scored_rollouts(std::ostream& out, std::span<const ScoredRollout> rollouts);

/// Sidecar metadata written next to a built index (one entry per line;
/// vectors stay in the binary index).
void write_entry_meta_jsonl(std::ostream& out, std::span<const KbEntry> entries);

std::string metrics_report_json(const MetricsReport& report);
/// metric,value rows; deterministic ordering and float formatting.
std::string metrics_report_csv(const MetricsReport& report);

std::string train_curve_csv(std::span<const TrainStepStats> curve);
std::string policy_json(const ToyPolicy& policy, double sample_temperature);

}  // namespace mmrag
