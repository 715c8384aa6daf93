#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmrag/embedding.hpp"

namespace mmrag {

/// One <image, section> knowledge-base unit with its fused index vector.
struct KbEntry {
  std::uint64_t entry_id = 0;
  std::string entity_id;
  std::string article_id;
  std::string section_id;
  EmbeddingVector vector;
  std::string section_text;
  std::string image_ref;
};

struct ScoredCandidate {
  std::uint64_t entry_id = 0;
  double score = 0.0;  // cosine similarity, in [-1, 1]

  bool operator==(const ScoredCandidate&) const = default;
};

struct IndexHeader {
  std::uint32_t format_version = 0;
  std::uint32_t dim = 0;
  std::uint64_t entry_count = 0;
  std::uint64_t checksum = 0;
};

/// Entry fields without the vector payload.
struct EntryMeta {
  std::uint64_t entry_id = 0;
  std::string entity_id;
  std::string article_id;
  std::string section_id;
  std::string image_ref;
  std::string section_text;
};

/// Exact brute-force cosine index. Build phase is single-writer; seal()
/// freezes the index, after which unlimited concurrent searches are safe.
/// No approximation anywhere: every score is the exact cosine, so all
/// downstream rewards and metrics are deterministic.
class VectorIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  explicit VectorIndex(std::size_t dim);

  /// Moves the given entries into the index. Returns the count added.
  /// Errors: dim mismatch, duplicate/non-finite/zero-norm vector, sealed.
  std::size_t add_entries(std::vector<KbEntry> entries);

  void seal();
  bool sealed() const noexcept { return sealed_; }

  std::size_t size() const noexcept { return meta_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  /// Top-k by cosine similarity: score descending, ties broken by
  /// ascending entry_id; length min(k, size()). Requires a sealed,
  /// non-empty index, matching dim, k >= 1 and a non-zero query.
  std::vector<ScoredCandidate> search_topk(const EmbeddingVector& query,
                                           std::size_t k) const;

  const EntryMeta& entry_meta(std::uint64_t entry_id) const;
  std::span<const float> entry_vector(std::uint64_t entry_id) const;
  bool contains(std::uint64_t entry_id) const;

  /// All entry ids of one article, ascending. Sealed index only.
  std::vector<std::uint64_t> article_entries(const std::string& article_id) const;

  /// Metas in storage order (ascending slot, which build_kb makes
  /// (article_id, section_id)-sorted).
  const std::vector<EntryMeta>& entries() const noexcept { return meta_; }

  /// Binary persistence. Layout: fixed little-endian header (magic,
  /// version, dim, count, payload checksum), then packed float32 vectors,
  /// then length-prefixed UTF-8 metadata records. load(save(x)) is
  /// bit-exact. save requires a sealed index.
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  std::size_t slot_of(std::uint64_t entry_id) const;
  std::span<const float> row(std::size_t slot) const {
    return {data_.data() + slot * dim_, dim_};
  }

  std::size_t dim_;
  bool sealed_ = false;
  std::vector<float> data_;           // row-major, size() * dim_
  std::vector<EntryMeta> meta_;       // parallel to rows
  std::vector<double> norms_;         // per-row L2 norm, filled by seal()
  std::unordered_map<std::uint64_t, std::size_t> id_to_slot_;
  std::unordered_map<std::string, std::vector<std::uint64_t>> article_map_;
};

}  // namespace mmrag
