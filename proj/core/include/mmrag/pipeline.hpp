#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmrag/metrics.hpp"
#include "mmrag/pipeline_config.hpp"
#include "mmrag/vector_index.hpp"

namespace mmrag {

/// One evaluation question before the pipeline runs.
struct QueryRecord {
  std::string question;
  std::optional<std::string> image_ref;
  std::vector<std::string> gold_answers;
  std::optional<std::string> gold_entity;
  std::optional<std::string> gold_section_id;
  std::optional<Decision> gold_route;
};

struct PipelineOptions {
  /// Rewrite the question through the refiner template before encoding;
  /// malformed rollouts fall back to the original question.
  bool refine = false;
  /// Record wall-clock stage timings on the records. Off by default: it
  /// makes otherwise deterministic outputs differ across runs.
  bool timings = false;
};

/// Stage driver shared by the CLI commands and the sweep: retrieve fills
/// `retrieved`, rerank fills `context` (+ traces), answer fills the
/// prediction/route fields. Holds its config by value so callers can vary
/// parameters per instance over one immutable index.
class PipelineRunner {
 public:
  PipelineRunner(PipelineConfig cfg, const VectorIndex& index, Gateway& gateway);

  EvalRecord retrieve(const QueryRecord& query, std::size_t k,
                      const PipelineOptions& options = {}) const;
  void rerank(EvalRecord& record) const;
  void answer(EvalRecord& record, const PipelineOptions& options = {}) const;

  /// Weighted query vector. A record without an image is encoded
  /// text-only: alpha is forced to 0 so the (placeholder) visual block
  /// vanishes.
  EmbeddingVector encode_query(const std::string& text,
                               const std::optional<std::string>& image_ref) const;

  const PipelineConfig& config() const noexcept { return cfg_; }

 private:
  PipelineConfig cfg_;
  const VectorIndex& index_;
  Gateway& gateway_;
};

}  // namespace mmrag
