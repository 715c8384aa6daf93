#include "mmrag/vector_index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "mmrag/error.hpp"
#include "mmrag/hashing.hpp"

namespace mmrag {

namespace {

constexpr std::uint32_t kMagic = 0x58524D4DU;  // "MMRX" little-endian

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(data_ + pos_, len);
    pos_ += len;
    return s;
  }

  bool exhausted() const { return pos_ == size_; }

 private:
  unsigned char byte() { return static_cast<unsigned char>(data_[pos_++]); }
  void need(std::size_t n) {
    if (pos_ + n > size_) throw Error("index_truncated", "index file ends mid-record");
  }

  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error("config_invalid", "index dim must be positive");
}

std::size_t VectorIndex::add_entries(std::vector<KbEntry> entries) {
  if (sealed_) throw Error("index_sealed", "cannot add entries to a sealed index");
  // Validate the whole batch before mutating anything.
  std::unordered_map<std::uint64_t, bool> batch_ids;
  for (const KbEntry& e : entries) {
    if (e.vector.dim() != dim_) {
      throw Error("dim_mismatch",
                  "entry " + std::to_string(e.entry_id) + " has dim " +
                      std::to_string(e.vector.dim()) + ", index dim is " +
                      std::to_string(dim_));
    }
    if (id_to_slot_.contains(e.entry_id) || !batch_ids.emplace(e.entry_id, true).second) {
      throw Error("duplicate_entry",
                  "entry_id " + std::to_string(e.entry_id) + " already present");
    }
    if (!all_finite(e.vector.values)) {
      throw Error("non_finite",
                  "entry " + std::to_string(e.entry_id) + " has a non-finite value");
    }
    if (l2_norm_f32(e.vector.values) == 0.0) {
      throw Error("zero_vector",
                  "entry " + std::to_string(e.entry_id) + " has a zero vector");
    }
  }
  for (KbEntry& e : entries) {
    id_to_slot_.emplace(e.entry_id, meta_.size());
    data_.insert(data_.end(), e.vector.values.begin(), e.vector.values.end());
    meta_.push_back(EntryMeta{e.entry_id, std::move(e.entity_id),
                              std::move(e.article_id), std::move(e.section_id),
                              std::move(e.image_ref), std::move(e.section_text)});
  }
  return entries.size();
}

void VectorIndex::seal() {
  if (sealed_) return;
  norms_.resize(meta_.size());
  for (std::size_t i = 0; i < meta_.size(); ++i) {
    norms_[i] = l2_norm_f32(row(i));
  }
  article_map_.clear();
  for (const EntryMeta& m : meta_) {
    article_map_[m.article_id].push_back(m.entry_id);
  }
  for (auto& [article, ids] : article_map_) {
    std::sort(ids.begin(), ids.end());
  }
  sealed_ = true;
}

std::vector<ScoredCandidate> VectorIndex::search_topk(
    const EmbeddingVector& query, std::size_t k) const {
  if (!sealed_) throw Error("index_unsealed", "seal the index before searching");
  if (meta_.empty()) throw Error("index_empty", "search over an empty index");
  if (query.dim() != dim_) {
    throw Error("dim_mismatch", "query dim " + std::to_string(query.dim()) +
                                    ", index dim " + std::to_string(dim_));
  }
  if (k == 0) throw Error("config_invalid", "retrieval_k must be >= 1");
  const double query_norm = l2_norm_f32(query.values);
  if (query_norm == 0.0) throw Error("zero_vector", "query vector is zero");

  const std::size_t n = meta_.size();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double value = dot_f32(row(i), query.values) / (query_norm * norms_[i]);
    scores[i] = std::clamp(value, -1.0, 1.0);
  }

  const std::size_t take = std::min(k, n);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return meta_[a].entry_id < meta_[b].entry_id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), better);

  std::vector<ScoredCandidate> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back(ScoredCandidate{meta_[order[i]].entry_id, scores[order[i]]});
  }
  return out;
}

std::size_t VectorIndex::slot_of(std::uint64_t entry_id) const {
  const auto it = id_to_slot_.find(entry_id);
  if (it == id_to_slot_.end()) {
    throw Error("unknown_entry", "entry_id " + std::to_string(entry_id) + " not in index");
  }
  return it->second;
}

const EntryMeta& VectorIndex::entry_meta(std::uint64_t entry_id) const {
  return meta_[slot_of(entry_id)];
}

std::span<const float> VectorIndex::entry_vector(std::uint64_t entry_id) const {
  return row(slot_of(entry_id));
}

bool VectorIndex::contains(std::uint64_t entry_id) const {
  return id_to_slot_.contains(entry_id);
}

std::vector<std::uint64_t> VectorIndex::article_entries(
    const std::string& article_id) const {
  if (!sealed_) throw Error("index_unsealed", "article lookup requires a sealed index");
  const auto it = article_map_.find(article_id);
  if (it == article_map_.end()) return {};
  return it->second;
}

void VectorIndex::save(const std::filesystem::path& path) const {
  if (!sealed_) throw Error("index_unsealed", "seal the index before saving");

  std::string payload;
  payload.reserve(data_.size() * 4 + meta_.size() * 64);
  for (const float v : data_) put_f32(payload, v);
  for (const EntryMeta& m : meta_) {
    put_u64(payload, m.entry_id);
    put_string(payload, m.entity_id);
    put_string(payload, m.article_id);
    put_string(payload, m.section_id);
    put_string(payload, m.image_ref);
    put_string(payload, m.section_text);
  }

  std::string header;
  put_u32(header, kMagic);
  put_u32(header, kFormatVersion);
  put_u32(header, static_cast<std::uint32_t>(dim_));
  put_u32(header, 0);  // reserved
  put_u64(header, meta_.size());
  put_u64(header, fnv1a64(payload));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error("io", "short write to " + path.string());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 4 + 8 + 8;
  if (bytes.size() < kHeaderSize) {
    throw Error("index_truncated", "file shorter than the index header");
  }
  Reader header(bytes.data(), kHeaderSize);
  if (header.u32() != kMagic) throw Error("index_format", "bad magic; not an index file");
  const std::uint32_t version = header.u32();
  if (version != kFormatVersion) {
    throw Error("index_version", "index format_version " + std::to_string(version) +
                                     " unsupported (expected " +
                                     std::to_string(kFormatVersion) + ")");
  }
  const std::uint32_t dim = header.u32();
  header.u32();  // reserved
  const std::uint64_t count = header.u64();
  const std::uint64_t checksum = header.u64();

  const std::string_view payload(bytes.data() + kHeaderSize, bytes.size() - kHeaderSize);
  if (fnv1a64(payload) != checksum) {
    throw Error("index_checksum", "payload checksum mismatch");
  }

  VectorIndex index(dim);
  Reader body(payload.data(), payload.size());
  index.data_.reserve(static_cast<std::size_t>(count) * dim);
  for (std::uint64_t i = 0; i < count * dim; ++i) {
    index.data_.push_back(body.f32());
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    EntryMeta m;
    m.entry_id = body.u64();
    m.entity_id = body.str();
    m.article_id = body.str();
    m.section_id = body.str();
    m.image_ref = body.str();
    m.section_text = body.str();
    if (index.id_to_slot_.contains(m.entry_id)) {
      throw Error("duplicate_entry",
                  "entry_id " + std::to_string(m.entry_id) + " appears twice in file");
    }
    index.id_to_slot_.emplace(m.entry_id, index.meta_.size());
    index.meta_.push_back(std::move(m));
  }
  if (!body.exhausted()) {
    throw Error("index_format", "trailing bytes after the last metadata record");
  }
  index.seal();
  return index;
}

}  // namespace mmrag
