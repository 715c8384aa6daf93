#include "mmrag/kb_builder.hpp"

#include <algorithm>
#include <optional>

#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"
#include "mmrag/text.hpp"

namespace mmrag {

namespace {

using nlohmann::json;

std::optional<RawSection> parse_raw_section(const json& object, std::string* why) {
  if (!object.is_object()) {
    *why = "not a JSON object";
    return std::nullopt;
  }
  RawSection section;
  const auto read = [&](const char* key, std::string& out, bool required) {
    if (!object.contains(key)) {
      if (required) *why = std::string("missing field '") + key + "'";
      return !required;
    }
    if (!object[key].is_string()) {
      *why = std::string("field '") + key + "' is not a string";
      return false;
    }
    out = object[key].get<std::string>();
    if (required && out.empty()) {
      *why = std::string("field '") + key + "' is empty";
      return false;
    }
    return true;
  };
  if (!read("article_id", section.article_id, true)) return std::nullopt;
  if (!read("section_id", section.section_id, true)) return std::nullopt;
  if (!read("article_title", section.article_title, false)) return std::nullopt;
  if (!read("article_abstract", section.article_abstract, false)) return std::nullopt;
  if (!read("section_title", section.section_title, false)) return std::nullopt;
  if (!read("text", section.text, false)) return std::nullopt;
  if (!read("image_ref", section.image_ref, false)) return std::nullopt;
  if (!read("entity_id", section.entity_id, false)) return std::nullopt;
  return section;
}

}  // namespace

void validate(const KbBuildConfig& cfg) {
  if (cfg.summary_threshold_tokens == 0) {
    throw Error("config_invalid", "kb_build.summary_threshold_tokens must be > 0");
  }
  if (cfg.summary_threshold_tokens <= cfg.low_info_min_tokens) {
    throw Error("config_invalid",
                "kb_build.summary_threshold_tokens must exceed low_info_min_tokens");
  }
}

SectionClass classify_section(const RawSection& section, const KbBuildConfig& cfg) {
  const std::size_t tokens = token_count(section.text);
  if (tokens < cfg.low_info_min_tokens) return SectionClass::kSubstituteAbstract;
  if (cfg.blocklist_titles.contains(ascii_lower(section.section_title))) {
    return SectionClass::kSubstituteAbstract;
  }
  if (tokens > cfg.summary_threshold_tokens) return SectionClass::kSummarize;
  return SectionClass::kPassthrough;
}

KbBuildResult build_kb(std::istream& sections_jsonl, const KbBuildConfig& cfg,
                       Gateway& gateway, const FusionConfig& fusion_cfg) {
  validate(cfg);
  validate(fusion_cfg);

  KbBuildResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(sections_jsonl, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    const json object = json::parse(line, nullptr, /*allow_exceptions=*/false);
    std::string why;
    std::optional<RawSection> section;
    if (object.is_discarded()) {
      why = "invalid JSON";
    } else {
      section = parse_raw_section(object, &why);
    }
    if (!section) {
      ++result.malformed_lines;
      result.diagnostics.push_back(
          {line_number, "line " + std::to_string(line_number) + ": " + why});
      continue;
    }

    std::string resolved_text;
    try {
      switch (classify_section(*section, cfg)) {
        case SectionClass::kPassthrough:
          resolved_text = section->text;
          break;
        case SectionClass::kSubstituteAbstract:
          resolved_text = section->article_abstract;
          break;
        case SectionClass::kSummarize:
          resolved_text = gateway.chat_template(
              TemplateId::kSummarizer, {{"title", section->article_title},
                                        {"section_title", section->section_title},
                                        {"section_text", section->text}});
          break;
      }

      KbEntry entry;
      entry.entity_id = section->entity_id;
      entry.article_id = section->article_id;
      entry.section_id = section->section_id;
      entry.section_text = resolved_text;
      entry.image_ref = section->image_ref;
      entry.vector = build_kb_vector(gateway.embed_image(section->image_ref),
                                     gateway.embed_text(resolved_text), fusion_cfg);
      result.entries.push_back(std::move(entry));
    } catch (const GatewayError& e) {
      ++result.gateway_failures;
      result.diagnostics.push_back(
          {line_number, "line " + std::to_string(line_number) +
                            ": gateway failure, entry skipped: " + e.what()});
    } catch (const Error& e) {
      ++result.gateway_failures;
      result.diagnostics.push_back(
          {line_number, "line " + std::to_string(line_number) +
                            ": entry skipped (" + e.code() + "): " + e.what()});
    }
  }

  std::stable_sort(result.entries.begin(), result.entries.end(),
                   [](const KbEntry& a, const KbEntry& b) {
                     if (a.article_id != b.article_id) return a.article_id < b.article_id;
                     return a.section_id < b.section_id;
                   });
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    result.entries[i].entry_id = i;
  }
  return result;
}

VectorIndex build_kb_index(std::istream& sections_jsonl, const KbBuildConfig& cfg,
                           Gateway& gateway, const FusionConfig& fusion_cfg,
                           KbBuildResult* result_out) {
  KbBuildResult result = build_kb(sections_jsonl, cfg, gateway, fusion_cfg);
  VectorIndex index(fusion_cfg.d_vis + fusion_cfg.d_text);
  std::vector<KbEntry> entries = std::move(result.entries);
  if (result_out != nullptr) {
    // Caller keeps the metadata view; vectors live in the index.
    result.entries.reserve(entries.size());
    for (const KbEntry& e : entries) {
      KbEntry copy = e;
      copy.vector = EmbeddingVector{};
      result.entries.push_back(std::move(copy));
    }
    *result_out = std::move(result);
  }
  index.add_entries(std::move(entries));
  index.seal();
  return index;
}

}  // namespace mmrag
