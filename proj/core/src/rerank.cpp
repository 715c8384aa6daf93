#include "mmrag/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmrag/error.hpp"

namespace mmrag {

void validate(const FusionWeights& weights) {
  if (!(weights.beta1 >= 0.0 && weights.beta1 <= 1.0)) {
    throw Error("config_invalid", "weights.beta1 must lie in [0,1]");
  }
  if (!(weights.beta2 >= 0.0 && weights.beta2 <= 1.0)) {
    throw Error("config_invalid", "weights.beta2 must lie in [0,1]");
  }
}

std::vector<double> minmax_normalize(std::span<const double> scores) {
  if (scores.empty()) {
    throw Error("empty_scores", "minmax_normalize needs at least one score");
  }
  const auto [min_it, max_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *min_it;
  const double hi = *max_it;
  if (lo == hi) return std::vector<double>(scores.size(), 0.5);
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = (scores[i] - lo) / (hi - lo);
  }
  return out;
}

std::vector<double> fuse(std::span<const double> retrieval_scores,
                         std::span<const double> rerank_scores, double beta) {
  if (retrieval_scores.size() != rerank_scores.size()) {
    throw Error("dim_mismatch", "fuse over score lists of different lengths");
  }
  std::vector<double> out(retrieval_scores.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = beta * retrieval_scores[i] + (1.0 - beta) * rerank_scores[i];
  }
  return out;
}

namespace {

std::vector<std::size_t> fused_order(std::span<const RerankCandidate> candidates,
                                     std::span<const double> fused) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fused[a] != fused[b]) return fused[a] > fused[b];
    return candidates[a].entry_id < candidates[b].entry_id;
  });
  return order;
}

Stage1Result ranked_from(std::span<const RerankCandidate> candidates,
                         std::span<const double> fused,
                         std::vector<double> rerank_scores, bool degraded) {
  Stage1Result result;
  result.degraded = degraded;
  result.rerank_scores = std::move(rerank_scores);
  for (const std::size_t i : fused_order(candidates, fused)) {
    const RerankCandidate& c = candidates[i];
    result.ranked.push_back(RerankedContext{c.entry_id, c.article_id,
                                            c.section_id, c.section_text,
                                            fused[i], 0.0});
  }
  return result;
}

}  // namespace

Stage1Result stage1_rerank(const std::string& query,
                           std::span<const RerankCandidate> candidates,
                           Gateway& gateway, const FusionWeights& weights) {
  validate(weights);
  if (candidates.empty()) {
    throw Error("empty_candidates", "stage-1 rerank needs candidates");
  }
  std::vector<double> retrieval(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    retrieval[i] = candidates[i].retrieval_score;
  }
  const std::vector<double> retrieval_norm = minmax_normalize(retrieval);

  std::vector<std::string> passages;
  passages.reserve(candidates.size());
  for (const RerankCandidate& c : candidates) passages.push_back(c.section_text);

  std::vector<double> reranker;
  try {
    reranker = gateway.rerank(query, passages);
  } catch (const GatewayError&) {
    // Retrieval-only ordering keeps the pipeline available.
    return ranked_from(candidates, retrieval_norm, {}, /*degraded=*/true);
  }
  if (reranker.size() != candidates.size()) {
    throw Error("dim_mismatch", "reranker returned wrong score count");
  }
  const std::vector<double> reranker_norm = minmax_normalize(reranker);
  const std::vector<double> fused =
      fuse(retrieval_norm, reranker_norm, weights.beta1);
  return ranked_from(candidates, fused, std::move(reranker), /*degraded=*/false);
}

Stage2Result stage2_article_rerank(const std::string& query,
                                   const RerankedContext& top1,
                                   std::span<const ArticleSection> article_sections,
                                   Gateway& gateway, const FusionWeights& weights) {
  validate(weights);
  std::size_t top1_pos = article_sections.size();
  for (std::size_t i = 0; i < article_sections.size(); ++i) {
    if (article_sections[i].entry_id == top1.entry_id) top1_pos = i;
  }
  if (top1_pos == article_sections.size()) {
    throw Error("context_missing", "top-1 section is not among its article's sections");
  }

  std::vector<std::string> passages;
  passages.reserve(article_sections.size());
  for (const ArticleSection& s : article_sections) passages.push_back(s.section_text);

  Stage2Result result;
  std::vector<double> textual;
  try {
    textual = gateway.rerank(query, passages);
  } catch (const GatewayError&) {
    result.final_context = top1;
    result.final_context.stage2_score = top1.stage1_score;
    result.degraded = true;
    return result;
  }
  if (textual.size() != article_sections.size()) {
    throw Error("dim_mismatch", "textual reranker returned wrong score count");
  }

  // The stage-1 score exists only for the selected section; the rest of
  // the article starts at 0 so the fusion is total over its sections.
  std::vector<double> stage1_scores(article_sections.size(), 0.0);
  stage1_scores[top1_pos] = top1.stage1_score;

  const std::vector<double> stage1_norm = minmax_normalize(stage1_scores);
  const std::vector<double> textual_norm = minmax_normalize(textual);
  const std::vector<double> fused = fuse(stage1_norm, textual_norm, weights.beta2);

  std::size_t best = 0;
  for (std::size_t i = 1; i < fused.size(); ++i) {
    const bool better =
        fused[i] > fused[best] ||
        (fused[i] == fused[best] &&
         article_sections[i].entry_id < article_sections[best].entry_id);
    if (better) best = i;
  }

  result.final_context.entry_id = article_sections[best].entry_id;
  result.final_context.article_id = top1.article_id;
  result.final_context.section_id = article_sections[best].section_id;
  result.final_context.section_text = article_sections[best].section_text;
  result.final_context.stage1_score = stage1_norm[best];
  result.final_context.stage2_score = fused[best];
  result.textual_scores = std::move(textual);
  return result;
}

}  // namespace mmrag
