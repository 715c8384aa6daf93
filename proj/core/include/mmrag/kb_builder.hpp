#pragma once

#include <istream>
#include <set>
#include <string>
#include <vector>

#include "mmrag/embedding.hpp"
#include "mmrag/gateway.hpp"
#include "mmrag/vector_index.hpp"

namespace mmrag {

/// One raw <image, section> unit from the source dump.
struct RawSection {
  std::string article_id;
  std::string article_title;
  std::string article_abstract;
  std::string section_id;
  std::string section_title;
  std::string text;
  std::string image_ref;
  std::string entity_id;
};

struct KbBuildConfig {
  /// Sections longer than this (whitespace tokens) are summarized.
  std::size_t summary_threshold_tokens = 512;
  /// Sections shorter than this are low-information; the article abstract
  /// substitutes for them.
  std::size_t low_info_min_tokens = 30;
  /// Case-insensitive section titles that always take the abstract.
  std::set<std::string> blocklist_titles = {"references", "external links",
                                            "see also", "bibliography", "notes"};
};

/// Throws Error("config_invalid", ...) naming the offending field.
void validate(const KbBuildConfig& cfg);

enum class SectionClass { kPassthrough, kSummarize, kSubstituteAbstract };

/// Total and stable. SUBSTITUTE_ABSTRACT wins over SUMMARIZE: a section is
/// substituted iff it is under low_info_min_tokens or its title is
/// blocklisted; otherwise summarized iff over summary_threshold_tokens.
SectionClass classify_section(const RawSection& section, const KbBuildConfig& cfg);

struct KbBuildDiagnostic {
  std::size_t line = 0;  // 1-based input line; 0 when not line-specific
  std::string message;
};

struct KbBuildResult {
  /// Sorted by (article_id, section_id); entry ids assigned 0..n-1 in
  /// that order, so builds are order-deterministic.
  std::vector<KbEntry> entries;
  std::vector<KbBuildDiagnostic> diagnostics;
  std::size_t malformed_lines = 0;
  std::size_t gateway_failures = 0;
};

/// Reads one RawSection JSON object per line. Malformed lines are
/// reported with their line number and skipped; gateway failures skip the
/// affected entry. Vectors come from build_kb_vector over gateway
/// embeddings of (image_ref, resolved text).
KbBuildResult build_kb(std::istream& sections_jsonl, const KbBuildConfig& cfg,
                       Gateway& gateway, const FusionConfig& fusion_cfg);

/// Convenience: build, move into a sealed VectorIndex.
VectorIndex build_kb_index(std::istream& sections_jsonl, const KbBuildConfig& cfg,
                           Gateway& gateway, const FusionConfig& fusion_cfg,
                           KbBuildResult* result_out = nullptr);

}  // namespace mmrag
