#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmrag/pipeline.hpp"

namespace mmrag {

/// Value lists per swept parameter; an absent dimension keeps the config
/// value (a single point). Grid JSON accepts plain arrays or inclusive
/// {"start", "stop", "step"} ranges, so a coarse pass and a fine sub-range
/// pass are both one file away.
struct SweepGrid {
  std::vector<double> alpha;
  std::vector<double> beta1;
  std::vector<double> beta2;
  std::vector<std::size_t> k;
};

SweepGrid parse_sweep_grid(const std::string& json_text);
SweepGrid load_sweep_grid(const std::filesystem::path& path);

inline constexpr std::string_view kSweepCsvHeader =
    "alpha,beta1,beta2,k,R@1,R@5,R@10,R@20,PR@5,PR@20,vqa_std,vqa_relaxed";

/// Evaluates the Cartesian product (alpha, beta1, beta2, k) in fixed
/// nesting order over one immutable index; queries are re-encoded per
/// alpha, the KB is never rebuilt. Returns the CSV report (header above;
/// one row per grid point; byte-deterministic for deterministic
/// gateways). Retrieval depth per point is max(k, 20) so the fixed
/// R@20/PR@20 columns stay defined; rerank and answer stages see the
/// top-k candidates.
std::string run_sweep(const SweepGrid& grid, const PipelineConfig& cfg,
                      std::span<const QueryRecord> queries,
                      const VectorIndex& index, Gateway& gateway);

}  // namespace mmrag
