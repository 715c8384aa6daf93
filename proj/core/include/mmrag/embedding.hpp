#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mmrag {

/// Fixed-dimension real vector: encoder output, or a fused query/index
/// vector of dimension d_vis + d_text.
struct EmbeddingVector {
  std::vector<float> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<float> v) : values(std::move(v)) {}

  std::size_t dim() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }

  bool operator==(const EmbeddingVector&) const = default;
};

/// Modality-fusion parameters. `alpha` weights the visual block of the
/// query vector; the index side is always unweighted.
struct FusionConfig {
  double alpha = 0.59;
  std::size_t d_vis = 64;
  std::size_t d_text = 64;
  /// L2-normalize each modality block before weighting/concatenation, so
  /// alpha is a trade-off between blocks of comparable norm. Off gives the
  /// literal raw concatenation.
  bool per_modality_normalize = true;
};

/// Throws Error("config_invalid", ...) naming the offending field.
void validate(const FusionConfig& cfg);

/// Unweighted concat of the visual and textual blocks (index side).
/// Errors: dim mismatch against cfg; zero-norm block when normalizing.
EmbeddingVector build_kb_vector(const EmbeddingVector& img_emb,
                                const EmbeddingVector& txt_emb,
                                const FusionConfig& cfg);

/// Weighted concat [alpha * vis_block, (1 - alpha) * text_block] (query
/// side). Same error contract as build_kb_vector.
EmbeddingVector build_query_vector(const EmbeddingVector& img_emb,
                                   const EmbeddingVector& txt_emb,
                                   const FusionConfig& cfg);

/// Cosine similarity in [-1, 1]. Errors on dimension mismatch or a zero
/// vector on either side.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Dot product over float data, accumulated in double with four
/// independent accumulators in a fixed order (deterministic, and fast
/// enough for the brute-force index scan).
double dot_f32(std::span<const float> a, std::span<const float> b);

double l2_norm_f32(std::span<const float> v);

bool all_finite(std::span<const float> v);

}  // namespace mmrag
