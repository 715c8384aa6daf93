#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmrag/grpo.hpp"
#include "mmrag/refiner.hpp"
#include "mmrag/stub_model.hpp"
#include "mmrag/vector_index.hpp"

namespace mmrag {

struct RewriteTemplateSpec {
  std::string name;
  /// Every "{query}" occurrence is replaced by the query text.
  std::string pattern;
  /// Emit a structurally broken rollout (missing closing answer tag), so
  /// the format penalty path is exercised during training.
  bool malformed = false;
};

struct ToyEnvQuery {
  std::string text;
  std::string gold_entity;
};

struct ToyEnvDocument {
  std::string entity_id;
  std::string text;
};

struct ToyEnvSpec {
  std::vector<RewriteTemplateSpec> templates;
  std::vector<ToyEnvQuery> queries;
  std::vector<ToyEnvDocument> documents;
};

ToyEnvSpec parse_toy_env_spec(const std::string& json_text);
ToyEnvSpec load_toy_env_spec(const std::filesystem::path& path);

/// Rewrite-template environment over a synthetic text index. A rollout is
/// the template applied to the query, wrapped in the refiner's output
/// format; its reward is the full format + retrieval reward of that
/// rollout against the index (stub text embeddings, entity dedup, Table-1
/// style banding). Everything is a pure function of (spec, stub_seed).
class TemplateRewriteEnv final : public RewriteEnv {
 public:
  TemplateRewriteEnv(ToyEnvSpec spec, std::uint64_t stub_seed,
                     std::size_t embed_dim = 64, int reward_depth = kRewardDepth);

  std::size_t action_count() const override { return spec_.templates.size(); }
  const std::string& action_name(std::size_t action) const override;
  std::size_t query_count() const override { return spec_.queries.size(); }
  double rollout_reward(std::size_t query_index, std::size_t action) const override;

  std::string rewritten_query(std::size_t query_index, std::size_t action) const;
  std::string rollout_text(std::size_t query_index, std::size_t action) const;
  RewardRecord score_rollout(std::size_t query_index, std::size_t action) const;

 private:
  ToyEnvSpec spec_;
  StubModel model_;
  VectorIndex index_;
  int reward_depth_;
};

}  // namespace mmrag
