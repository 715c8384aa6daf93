#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmrag/gateway.hpp"

namespace mmrag {

/// Stage weights. beta1 balances retrieval similarity against the
/// multimodal reranker; beta2 balances the stage-1 score against the
/// intra-article textual reranker. Both in [0,1]; 1.0 disables the
/// respective reranker.
struct FusionWeights {
  double beta1 = 0.6;
  double beta2 = 0.2;
};

void validate(const FusionWeights& weights);

/// (s - min) / (max - min); an all-equal input maps to all 0.5.
std::vector<double> minmax_normalize(std::span<const double> scores);

/// beta * retrieval + (1 - beta) * rerank, elementwise. Inputs are
/// expected to already be normalized per query.
std::vector<double> fuse(std::span<const double> retrieval_scores,
                         std::span<const double> rerank_scores, double beta);

struct RerankedContext {
  std::uint64_t entry_id = 0;
  std::string article_id;
  std::string section_id;
  std::string section_text;
  double stage1_score = 0.0;
  double stage2_score = 0.0;
};

/// Stage-1 input: a retrieval candidate plus its passage text.
struct RerankCandidate {
  std::uint64_t entry_id = 0;
  double retrieval_score = 0.0;
  std::string article_id;
  std::string section_id;
  std::string section_text;
};

struct Stage1Result {
  /// Fused order, best first; ties broken by ascending entry_id.
  std::vector<RerankedContext> ranked;
  /// Raw reranker scores in input order (trace; empty when degraded).
  std::vector<double> rerank_scores;
  /// Gateway failed: the ranking above is retrieval-only.
  bool degraded = false;
};

/// Multimodal rerank fused with retrieval similarity via beta1. Both score
/// lists are minmax-normalized per query before fusion. Gateway failure
/// degrades to the retrieval-only ordering with the flag set.
Stage1Result stage1_rerank(const std::string& query,
                           std::span<const RerankCandidate> candidates,
                           Gateway& gateway, const FusionWeights& weights);

struct ArticleSection {
  std::uint64_t entry_id = 0;
  std::string section_id;
  std::string section_text;
};

struct Stage2Result {
  RerankedContext final_context;
  /// Raw textual reranker scores in article-section order (trace).
  std::vector<double> textual_scores;
  bool degraded = false;
};

/// Textual rerank over every section of the top-1 candidate's article,
/// fused via beta2. The stage-1 score is assigned to its own section and 0
/// to the others before normalization. Gateway failure returns top1
/// unchanged with the flag set. Never selects outside the article.
Stage2Result stage2_article_rerank(const std::string& query,
                                   const RerankedContext& top1,
                                   std::span<const ArticleSection> article_sections,
                                   Gateway& gateway, const FusionWeights& weights);

}  // namespace mmrag
