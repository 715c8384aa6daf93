#include "mmrag/refiner.hpp"

#include <array>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"
#include "mmrag/rng.hpp"

namespace mmrag {

namespace {

// Position of the single occurrence of `tag`, or npos when absent or
// repeated.
std::size_t sole_occurrence(std::string_view text, std::string_view tag) {
  const std::size_t first = text.find(tag);
  if (first == std::string_view::npos) return std::string_view::npos;
  if (text.find(tag, first + tag.size()) != std::string_view::npos) {
    return std::string_view::npos;
  }
  return first;
}

constexpr std::array<RetrievalRewardBand, 6> kRewardBands = {{
    {1, 5, 4.0},
    {6, 10, 3.5},
    {11, 20, 3.0},
    {21, 50, 1.0},
    {51, 100, 0.5},
    {101, 200, 0.1},
}};

}  // namespace

RefinerOutput parse_refiner_output(std::string_view text) {
  RefinerOutput out;
  out.raw_text = std::string(text);

  const std::size_t think_open = sole_occurrence(text, "<think>");
  const std::size_t think_close = sole_occurrence(text, "</think>");
  const std::size_t answer_open = sole_occurrence(text, "<answer>");
  const std::size_t answer_close = sole_occurrence(text, "</answer>");
  if (think_open == std::string_view::npos ||
      think_close == std::string_view::npos ||
      answer_open == std::string_view::npos ||
      answer_close == std::string_view::npos) {
    return out;
  }
  if (!(think_open < think_close && think_close < answer_open &&
        answer_open < answer_close)) {
    return out;
  }

  const std::size_t think_begin = think_open + 7;
  out.think = std::string(text.substr(think_begin, think_close - think_begin));
  const std::size_t answer_begin = answer_open + 8;
  out.answer_payload =
      std::string(text.substr(answer_begin, answer_close - answer_begin));

  const nlohmann::json payload = nlohmann::json::parse(
      *out.answer_payload, nullptr, /*allow_exceptions=*/false);
  if (!payload.is_object() || !payload.contains("query") ||
      !payload["query"].is_string()) {
    return out;
  }
  std::string query = payload["query"].get<std::string>();
  if (query.empty()) return out;

  out.refined_query = std::move(query);
  out.well_formed = true;
  return out;
}

double format_reward(const RefinerOutput& output) {
  return output.well_formed ? kFormatRewardValid : kFormatRewardInvalid;
}

std::span<const RetrievalRewardBand> retrieval_reward_bands() {
  return kRewardBands;
}

double retrieval_reward(std::optional<int> rank) {
  if (!rank.has_value()) return kRetrievalMissPenalty;
  for (const RetrievalRewardBand& band : kRewardBands) {
    if (*rank >= band.lo && *rank <= band.hi) return band.reward;
  }
  throw Error("rank_out_of_range",
              "hit rank " + std::to_string(*rank) + " outside [1, 200]");
}

std::optional<int> entity_hit_rank(std::span<const std::string> ranked_entities,
                                   const std::string& gold_entity, int depth) {
  std::unordered_set<std::string_view> seen;
  int rank = 0;
  for (const std::string& entity : ranked_entities) {
    if (!seen.insert(entity).second) continue;  // duplicate of an earlier entity
    ++rank;
    if (rank > depth) return std::nullopt;
    if (entity == gold_entity) return rank;
  }
  return std::nullopt;
}

RewardRecord total_reward(const RefinerOutput& output, std::optional<int> rank,
                          bool score_retrieval_when_malformed) {
  RewardRecord record;
  record.format_reward = format_reward(output);
  if (!output.well_formed && !score_retrieval_when_malformed) {
    // Retrieval is skipped for unparseable rollouts; miss penalty applies.
    record.retrieval_reward = kRetrievalMissPenalty;
  } else {
    record.retrieval_reward = retrieval_reward(rank);
    record.hit_rank = rank;
  }
  record.total = record.format_reward + record.retrieval_reward;
  return record;
}

HitBucket sampling_bucket(std::optional<int> rank) {
  if (!rank.has_value()) return HitBucket::kMiss;
  const int r = *rank;
  if (r < 1 || r > 200) {
    throw Error("rank_out_of_range",
                "hit rank " + std::to_string(r) + " outside [1, 200]");
  }
  if (r <= 5) return HitBucket::kRank1To5;
  if (r <= 10) return HitBucket::kRank6To10;
  if (r <= 20) return HitBucket::kRank11To20;
  return HitBucket::kRank21To200;
}

std::string_view bucket_name(HitBucket bucket) {
  switch (bucket) {
    case HitBucket::kRank1To5: return "[1,5]";
    case HitBucket::kRank6To10: return "[6,10]";
    case HitBucket::kRank11To20: return "[11,20]";
    case HitBucket::kRank21To200: return "[21,200]";
    case HitBucket::kMiss: return "miss";
  }
  return "?";
}

SamplingPlan SamplingPlan::evqa() { return {500, 1000, 1000, 2500, 2000}; }
SamplingPlan SamplingPlan::infoseek() { return {0, 500, 1000, 2500, 3000}; }

std::vector<std::size_t> sample_training_queries(
    std::span<const std::optional<int>> hit_ranks, const SamplingPlan& plan,
    std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 5> pools;
  for (std::size_t i = 0; i < hit_ranks.size(); ++i) {
    pools[static_cast<std::size_t>(sampling_bucket(hit_ranks[i]))].push_back(i);
  }

  const std::array<std::size_t, 5> requested = {
      plan.rank1_5, plan.rank6_10, plan.rank11_20, plan.rank21_200, plan.miss};

  std::string shortfalls;
  for (std::size_t b = 0; b < 5; ++b) {
    if (pools[b].size() < requested[b]) {
      if (!shortfalls.empty()) shortfalls += "; ";
      shortfalls += "bucket " +
                    std::string(bucket_name(static_cast<HitBucket>(b))) +
                    ": need " + std::to_string(requested[b]) + ", have " +
                    std::to_string(pools[b].size());
    }
  }
  if (!shortfalls.empty()) throw Error("sampling_shortfall", shortfalls);

  SplitMix64 rng(seed);
  std::vector<std::size_t> sampled;
  sampled.reserve(plan.total());
  for (std::size_t b = 0; b < 5; ++b) {
    const std::vector<std::size_t> picks =
        sample_without_replacement(pools[b].size(), requested[b], rng);
    for (const std::size_t p : picks) sampled.push_back(pools[b][p]);
  }
  return sampled;
}

}  // namespace mmrag
