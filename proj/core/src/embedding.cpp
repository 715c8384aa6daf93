#include "mmrag/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

void append_block(std::vector<float>& out, std::span<const float> block,
                  bool normalize, double weight, const char* block_name) {
  double scale = weight;
  if (normalize) {
    const double norm = l2_norm_f32(block);
    if (norm == 0.0) {
      throw Error("zero_norm_block",
                  std::string(block_name) + " block has zero norm; cannot normalize");
    }
    scale = weight / norm;
  }
  for (const float v : block) {
    out.push_back(static_cast<float>(v * scale));
  }
}

void check_block_dims(const EmbeddingVector& img_emb,
                      const EmbeddingVector& txt_emb, const FusionConfig& cfg) {
  if (img_emb.dim() != cfg.d_vis) {
    throw Error("dim_mismatch",
                "visual embedding dim " + std::to_string(img_emb.dim()) +
                    " != configured d_vis " + std::to_string(cfg.d_vis));
  }
  if (txt_emb.dim() != cfg.d_text) {
    throw Error("dim_mismatch",
                "text embedding dim " + std::to_string(txt_emb.dim()) +
                    " != configured d_text " + std::to_string(cfg.d_text));
  }
  if (!all_finite(img_emb.values) || !all_finite(txt_emb.values)) {
    throw Error("non_finite", "embedding contains a non-finite value");
  }
}

}  // namespace

void validate(const FusionConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    throw Error("config_invalid", "fusion.alpha must lie in [0,1]");
  }
  if (cfg.d_vis < 1) throw Error("config_invalid", "fusion.d_vis must be >= 1");
  if (cfg.d_text < 1) throw Error("config_invalid", "fusion.d_text must be >= 1");
}

EmbeddingVector build_kb_vector(const EmbeddingVector& img_emb,
                                const EmbeddingVector& txt_emb,
                                const FusionConfig& cfg) {
  validate(cfg);
  check_block_dims(img_emb, txt_emb, cfg);
  EmbeddingVector out;
  out.values.reserve(cfg.d_vis + cfg.d_text);
  append_block(out.values, img_emb.values, cfg.per_modality_normalize, 1.0, "visual");
  append_block(out.values, txt_emb.values, cfg.per_modality_normalize, 1.0, "text");
  return out;
}

EmbeddingVector build_query_vector(const EmbeddingVector& img_emb,
                                   const EmbeddingVector& txt_emb,
                                   const FusionConfig& cfg) {
  validate(cfg);
  check_block_dims(img_emb, txt_emb, cfg);
  EmbeddingVector out;
  out.values.reserve(cfg.d_vis + cfg.d_text);
  append_block(out.values, img_emb.values, cfg.per_modality_normalize, cfg.alpha, "visual");
  append_block(out.values, txt_emb.values, cfg.per_modality_normalize, 1.0 - cfg.alpha, "text");
  return out;
}

double dot_f32(std::span<const float> a, std::span<const float> b) {
  const std::size_t n = a.size();
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    acc1 += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
    acc2 += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
    acc3 += static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]);
  }
  for (; i < n; ++i) {
    acc0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return (acc0 + acc1) + (acc2 + acc3);
}

double l2_norm_f32(std::span<const float> v) {
  return std::sqrt(dot_f32(v, v));
}

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(),
                     [](float x) { return std::isfinite(x); });
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error("dim_mismatch", "cosine over dims " + std::to_string(a.dim()) +
                                    " and " + std::to_string(b.dim()));
  }
  if (a.empty()) throw Error("dim_mismatch", "cosine over empty vectors");
  const double na = l2_norm_f32(a.values);
  const double nb = l2_norm_f32(b.values);
  if (na == 0.0 || nb == 0.0) {
    throw Error("zero_vector", "cosine is undefined for a zero vector");
  }
  const double value = dot_f32(a.values, b.values) / (na * nb);
  return std::clamp(value, -1.0, 1.0);
}

}  // namespace mmrag
