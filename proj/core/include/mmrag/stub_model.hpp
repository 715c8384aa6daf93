#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/embedding.hpp"

namespace mmrag {

/// Deterministic stand-in for every remote model. Every output is a pure
/// function of (seed, inputs), so full pipelines replay bit-identically
/// across runs and machines. Shared by the in-process stub gateway and the
/// stub HTTP server, which therefore agree byte-for-byte.
///
/// Behaviors:
///  - chat dispatches on the system text of the known prompt templates:
///    refiner echoes the query inside a well-formed rollout, the inspector
///    PASSes iff a question token of >= 4 chars occurs in the context
///    (else FAILs with a hash-derived answer), generators answer with the
///    first clause of the context, the summarizer returns the first 24
///    content tokens, expansion templates reply with their JSON shapes.
///  - embeddings are L2-normalized token-bag hash vectors (text) or a
///    single hash vector of the opaque ref (image); shared tokens give
///    graded cosine similarity.
///  - rerank scores are stub-embedding cosines between query and passage.
class StubModel {
 public:
  StubModel(std::uint64_t seed, std::size_t d_vis, std::size_t d_text);

  std::string chat(const std::string& system_text,
                   const std::string& user_text) const;
  EmbeddingVector embed_text(std::string_view text) const;
  EmbeddingVector embed_image(std::string_view image_ref) const;
  std::vector<double> rerank(std::string_view query,
                             std::span<const std::string> passages) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t d_vis() const noexcept { return d_vis_; }
  std::size_t d_text() const noexcept { return d_text_; }

 private:
  EmbeddingVector token_bag_embedding(std::string_view tag,
                                      std::string_view input, std::size_t dim,
                                      bool tokenize) const;

  std::uint64_t seed_;
  std::size_t d_vis_;
  std::size_t d_text_;
};

}  // namespace mmrag
