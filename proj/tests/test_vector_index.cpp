#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "mmrag/error.hpp"
#include "mmrag/vector_index.hpp"
#include "support/test_util.hpp"

using namespace mmrag;

namespace {

KbEntry make_entry(std::uint64_t id, EmbeddingVector v) {
  KbEntry e;
  e.entry_id = id;
  e.entity_id = "E" + std::to_string(id);
  e.article_id = "A" + std::to_string(id / 4);
  e.section_id = "S" + std::to_string(id);
  e.section_text = "section " + std::to_string(id);
  e.image_ref = "img" + std::to_string(id);
  e.vector = std::move(v);
  return e;
}

std::vector<KbEntry> seeded_entries(std::uint64_t seed, std::size_t count,
                                    std::size_t dim) {
  SplitMix64 rng(seed);
  std::vector<KbEntry> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    entries.push_back(make_entry(i, test::random_vector(rng, dim)));
  }
  return entries;
}

VectorIndex build_index(const std::vector<KbEntry>& entries, std::size_t dim) {
  VectorIndex index(dim);
  index.add_entries(entries);
  index.seal();
  return index;
}

}  // namespace

TEST_CASE("add, seal, size") {
  VectorIndex index(4);
  CHECK(index.add_entries(seeded_entries(1, 3, 4)) == 3);
  CHECK(index.size() == 3);
  CHECK_FALSE(index.sealed());
  index.seal();
  CHECK(index.sealed());
  CHECK_THROWS_WITH_AS(index.add_entries(seeded_entries(99, 1, 4)),
                       doctest::Contains("sealed"), Error);
}

TEST_CASE("dim mismatch and duplicate ids are rejected") {
  VectorIndex index(128);
  auto wrong_dim = seeded_entries(2, 1, 10);
  CHECK_THROWS_WITH_AS(index.add_entries(wrong_dim), doctest::Contains("dim"),
                       Error);
  auto ok = seeded_entries(3, 2, 128);
  index.add_entries(ok);
  auto duplicate = seeded_entries(4, 1, 128);
  duplicate[0].entry_id = ok[1].entry_id;
  CHECK_THROWS_WITH_AS(index.add_entries(duplicate),
                       doctest::Contains("already present"), Error);
  CHECK(index.size() == 2);  // failed batches leave the index untouched
}

TEST_CASE("search: self-match ranks first with score 1") {
  auto entries = seeded_entries(5, 30, 16);
  const VectorIndex index = build_index(entries, 16);
  const auto results = index.search_topk(entries[7].vector, 3);
  REQUIRE(results.size() == 3);
  CHECK(results[0].entry_id == 7);
  CHECK(results[0].score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("search: identical vectors tie-break by ascending entry_id") {
  SplitMix64 rng(6);
  const EmbeddingVector shared = test::random_vector(rng, 8);
  std::vector<KbEntry> entries;
  entries.push_back(make_entry(9, shared));
  entries.push_back(make_entry(3, shared));
  entries.push_back(make_entry(5, test::random_vector(rng, 8)));
  const VectorIndex index = build_index(entries, 8);
  const auto results = index.search_topk(shared, 2);
  REQUIRE(results.size() == 2);
  CHECK(results[0].entry_id == 3);
  CHECK(results[1].entry_id == 9);
}

TEST_CASE("search error contract") {
  VectorIndex unsealed(4);
  unsealed.add_entries(seeded_entries(7, 2, 4));
  const EmbeddingVector q = seeded_entries(8, 1, 4)[0].vector;
  CHECK_THROWS_AS(unsealed.search_topk(q, 1), Error);

  VectorIndex empty(4);
  empty.seal();
  CHECK_THROWS_AS(empty.search_topk(q, 1), Error);

  auto index = build_index(seeded_entries(9, 4, 4), 4);
  CHECK_THROWS_AS(index.search_topk(EmbeddingVector{{1, 2, 3}}, 1), Error);
  CHECK_THROWS_AS(index.search_topk(EmbeddingVector{{0, 0, 0, 0}}, 1), Error);
  CHECK_THROWS_AS(index.search_topk(q, 0), Error);
}

TEST_CASE("search matches the exhaustive oracle on a seeded fixture") {
  const std::size_t dim = 32;
  auto entries = seeded_entries(40, 1500, dim);
  const VectorIndex index = build_index(entries, dim);
  SplitMix64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const EmbeddingVector q = test::random_vector(rng, dim);
    for (const std::size_t k : {std::size_t{1}, std::size_t{7}, std::size_t{100}}) {
      const auto got = index.search_topk(q, k);
      const auto expected = test::brute_force_topk(entries, q, k);
      REQUIRE(got.size() == expected.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].entry_id == expected[i]);
      }
    }
  }
}

TEST_CASE("scores are non-increasing and within [-1, 1]") {
  auto entries = seeded_entries(42, 300, 12);
  const VectorIndex index = build_index(entries, 12);
  SplitMix64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const auto results =
        index.search_topk(test::random_vector(rng, 12), entries.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(results[i].score >= -1.0);
      CHECK(results[i].score <= 1.0);
      if (i > 0) CHECK(results[i - 1].score >= results[i].score);
    }
  }
}

TEST_CASE("k larger than the index returns everything") {
  auto entries = seeded_entries(44, 5, 4);
  const VectorIndex index = build_index(entries, 4);
  CHECK(index.search_topk(entries[0].vector, 50).size() == 5);
}

TEST_CASE("save/load round-trip reproduces search results bit-exactly") {
  test::TempDir tmp("index_roundtrip");
  auto entries = seeded_entries(50, 100, 24);
  const VectorIndex index = build_index(entries, 24);
  index.save(tmp.file("index.bin"));
  const VectorIndex loaded = VectorIndex::load(tmp.file("index.bin"));
  CHECK(loaded.size() == index.size());
  CHECK(loaded.dim() == index.dim());

  SplitMix64 rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    const EmbeddingVector q = test::random_vector(rng, 24);
    const auto a = index.search_topk(q, 10);
    const auto b = loaded.search_topk(q, 10);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].entry_id == b[i].entry_id);
      CHECK(a[i].score == b[i].score);  // bit-exact
    }
  }
  const EntryMeta& meta = loaded.entry_meta(42);
  CHECK(meta.section_text == "section 42");
  CHECK(meta.image_ref == "img42");
}

TEST_CASE("corrupting one payload byte fails the checksum") {
  test::TempDir tmp("index_corrupt");
  const VectorIndex index = build_index(seeded_entries(60, 20, 8), 8);
  const auto path = tmp.file("index.bin");
  index.save(path);

  std::string bytes = test::read_file(path);
  bytes[bytes.size() / 2] ^= 0x01;
  test::write_file(path, bytes);
  CHECK_THROWS_WITH_AS(VectorIndex::load(path), doctest::Contains("checksum"), Error);
}

TEST_CASE("version bump is rejected") {
  test::TempDir tmp("index_version");
  const VectorIndex index = build_index(seeded_entries(61, 4, 8), 8);
  const auto path = tmp.file("index.bin");
  index.save(path);

  std::string bytes = test::read_file(path);
  bytes[4] = static_cast<char>(VectorIndex::kFormatVersion + 1);  // version field
  test::write_file(path, bytes);
  CHECK_THROWS_WITH_AS(VectorIndex::load(path), doctest::Contains("format_version"),
                       Error);
}

TEST_CASE("truncated file is rejected") {
  test::TempDir tmp("index_trunc");
  const VectorIndex index = build_index(seeded_entries(62, 10, 8), 8);
  const auto path = tmp.file("index.bin");
  index.save(path);
  const std::string bytes = test::read_file(path);
  test::write_file(path, bytes.substr(0, bytes.size() - 7));
  CHECK_THROWS_AS(VectorIndex::load(path), Error);
}

TEST_CASE("article lookup returns ascending entry ids") {
  auto entries = seeded_entries(70, 10, 4);
  const VectorIndex index = build_index(entries, 4);
  const auto ids = index.article_entries("A1");  // ids 4..7
  REQUIRE(ids.size() == 4);
  CHECK(ids == std::vector<std::uint64_t>({4, 5, 6, 7}));
  CHECK(index.article_entries("missing").empty());
}

TEST_CASE("repeated searches are deterministic") {
  auto entries = seeded_entries(80, 500, 16);
  const VectorIndex index = build_index(entries, 16);
  SplitMix64 rng(81);
  const EmbeddingVector q = test::random_vector(rng, 16);
  const auto first = index.search_topk(q, 50);
  for (int i = 0; i < 5; ++i) {
    const auto again = index.search_topk(q, 50);
    REQUIRE(again.size() == first.size());
    for (std::size_t j = 0; j < first.size(); ++j) {
      CHECK(again[j].entry_id == first[j].entry_id);
      CHECK(again[j].score == first[j].score);
    }
  }
}
