#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmrag {

/// Parsed query-rewriter rollout. well_formed requires exactly one
/// <think>...</think> followed by exactly one <answer>...</answer>, with
/// the answer content a JSON object holding a non-empty string "query".
struct RefinerOutput {
  std::string raw_text;
  std::optional<std::string> think;
  std::optional<std::string> answer_payload;
  std::optional<std::string> refined_query;
  bool well_formed = false;
};

/// Total over arbitrary byte strings; malformation is encoded in
/// well_formed=false, never thrown.
RefinerOutput parse_refiner_output(std::string_view text);

inline constexpr double kFormatRewardValid = 1.0;
inline constexpr double kFormatRewardInvalid = -4.0;
inline constexpr double kRetrievalMissPenalty = -2.5;
inline constexpr int kRewardDepth = 200;

double format_reward(const RefinerOutput& output);

/// One step of the discrete hit-rank -> reward mapping.
struct RetrievalRewardBand {
  int lo;
  int hi;
  double reward;
};

/// The six reward bands over ranks [1, 200], descending.
std::span<const RetrievalRewardBand> retrieval_reward_bands();

/// Reward for a 1-based hit rank in [1, 200]; absent rank = miss penalty.
/// Errors on a rank outside [1, 200].
double retrieval_reward(std::optional<int> rank);

/// 1-based rank of gold_entity among the first `depth` distinct entities
/// (duplicates deduplicated preserving first occurrence); absent if not
/// found within depth.
std::optional<int> entity_hit_rank(std::span<const std::string> ranked_entities,
                                   const std::string& gold_entity,
                                   int depth = kRewardDepth);

struct RewardRecord {
  double format_reward = 0.0;
  double retrieval_reward = 0.0;
  double total = 0.0;
  std::optional<int> hit_rank;
};

/// total = format + retrieval. Malformed outputs skip retrieval and take
/// the miss penalty unless score_retrieval_when_malformed is set.
RewardRecord total_reward(const RefinerOutput& output, std::optional<int> rank,
                          bool score_retrieval_when_malformed = false);

// ---------------------------------------------------------------------------
// Stratified sampling of RL training queries by retrieval hit rank.

enum class HitBucket { kRank1To5, kRank6To10, kRank11To20, kRank21To200, kMiss };

HitBucket sampling_bucket(std::optional<int> rank);
std::string_view bucket_name(HitBucket bucket);

/// Requested sample count per bucket.
struct SamplingPlan {
  std::size_t rank1_5 = 0;
  std::size_t rank6_10 = 0;
  std::size_t rank11_20 = 0;
  std::size_t rank21_200 = 0;
  std::size_t miss = 0;

  std::size_t total() const {
    return rank1_5 + rank6_10 + rank11_20 + rank21_200 + miss;
  }

  static SamplingPlan evqa();      // 500 / 1000 / 1000 / 2500 / 2000
  static SamplingPlan infoseek();  // 0 / 500 / 1000 / 2500 / 3000
};

/// Indices into hit_ranks: per-bucket uniform samples without replacement,
/// exact counts per plan, deterministic under seed (buckets drawn in the
/// fixed order above). Errors with per-bucket shortfalls when a bucket's
/// population is insufficient.
std::vector<std::size_t> sample_training_queries(
    std::span<const std::optional<int>> hit_ranks, const SamplingPlan& plan,
    std::uint64_t seed);

}  // namespace mmrag
