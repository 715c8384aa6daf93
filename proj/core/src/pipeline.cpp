#include "mmrag/pipeline.hpp"

#include <chrono>

#include "mmrag/error.hpp"
#include "mmrag/refiner.hpp"

namespace mmrag {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

PipelineRunner::PipelineRunner(PipelineConfig cfg, const VectorIndex& index,
                               Gateway& gateway)
    : cfg_(std::move(cfg)), index_(index), gateway_(gateway) {
  validate(cfg_);
}

EmbeddingVector PipelineRunner::encode_query(
    const std::string& text, const std::optional<std::string>& image_ref) const {
  const EmbeddingVector text_emb = gateway_.embed_text(text);
  FusionConfig fusion = cfg_.fusion;
  EmbeddingVector image_emb;
  if (image_ref.has_value()) {
    image_emb = gateway_.embed_image(*image_ref);
  } else {
    image_emb = gateway_.embed_image("");
    fusion.alpha = 0.0;  // text-only retrieval for imageless records
  }
  return build_query_vector(image_emb, text_emb, fusion);
}

EvalRecord PipelineRunner::retrieve(const QueryRecord& query, std::size_t k,
                                    const PipelineOptions& options) const {
  EvalRecord record;
  record.question = query.question;
  record.image_ref = query.image_ref;
  record.gold_answers = query.gold_answers;
  record.gold_entity = query.gold_entity;
  record.gold_section_id = query.gold_section_id;
  record.gold_route = query.gold_route;

  const auto start = std::chrono::steady_clock::now();

  std::string retrieval_text = query.question;
  if (options.refine) {
    const std::string rollout = gateway_.chat_template(
        TemplateId::kRefiner, {{"Query", query.question}}, /*temperature=*/0.0,
        query.image_ref);
    const RefinerOutput refined = parse_refiner_output(rollout);
    if (refined.well_formed) {
      retrieval_text = *refined.refined_query;
      record.refined_question = refined.refined_query;
    }
  }

  const EmbeddingVector query_vec = encode_query(retrieval_text, query.image_ref);
  const std::vector<ScoredCandidate> hits = index_.search_topk(query_vec, k);
  record.retrieved.reserve(hits.size());
  for (const ScoredCandidate& hit : hits) {
    const EntryMeta& meta = index_.entry_meta(hit.entry_id);
    record.retrieved.push_back(RetrievedItem{hit.entry_id, hit.score,
                                             meta.entity_id, meta.article_id,
                                             meta.section_id, meta.section_text});
  }
  if (options.timings) record.retrieval_ms = elapsed_ms(start);
  return record;
}

void PipelineRunner::rerank(EvalRecord& record) const {
  if (record.retrieved.empty()) {
    throw Error("empty_candidates", "record has no retrieved candidates");
  }
  const std::string& query =
      record.refined_question.has_value() ? *record.refined_question : record.question;

  std::vector<RerankCandidate> candidates;
  candidates.reserve(record.retrieved.size());
  for (const RetrievedItem& item : record.retrieved) {
    const EntryMeta& meta = index_.entry_meta(item.entry_id);
    candidates.push_back(RerankCandidate{item.entry_id, item.score,
                                         meta.article_id, meta.section_id,
                                         meta.section_text});
  }

  const Stage1Result stage1 =
      stage1_rerank(query, candidates, gateway_, cfg_.weights);
  const RerankedContext& top1 = stage1.ranked.front();

  std::vector<ArticleSection> sections;
  for (const std::uint64_t id : index_.article_entries(top1.article_id)) {
    const EntryMeta& meta = index_.entry_meta(id);
    sections.push_back(ArticleSection{id, meta.section_id, meta.section_text});
  }

  const Stage2Result stage2 =
      stage2_article_rerank(query, top1, sections, gateway_, cfg_.weights);

  record.context = stage2.final_context;
  record.stage1_trace = stage1.rerank_scores;
  record.stage2_trace = stage2.textual_scores;
  record.rerank_degraded = stage1.degraded || stage2.degraded;
}

void PipelineRunner::answer(EvalRecord& record, const PipelineOptions& options) const {
  if (!record.context.has_value()) {
    throw Error("context_missing", "record has no reranked context; run rerank first");
  }
  const auto start = std::chrono::steady_clock::now();
  const AnswerRecord routed =
      decide_and_route(record.image_ref, record.question, *record.context,
                       gateway_, cfg_.generator_template);
  record.predicted_answer = routed.answer;
  record.route = routed.route;
  record.inspector_decision = routed.inspector_decision;
  record.answer_degraded = routed.degraded;
  if (options.timings) record.inference_ms = elapsed_ms(start);
}

}  // namespace mmrag
