#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmrag {

enum class TemplateId {
  kRefiner,
  kInspector,
  kGeneratorEvqa,
  kGeneratorInfoseek,
  kSummarizer,
  kAnswerExpansion,
  kCaptionExpansion,
};

/// A chat prompt with a fixed system text and a user text containing
/// `{name}` placeholders. Placeholder substitution is byte-exact; the
/// declared placeholder list is the authoritative variable set for the
/// template (other brace pairs in the text, e.g. JSON examples, are
/// plain text).
struct PromptTemplate {
  TemplateId id;
  std::string_view name;
  std::string_view system_text;
  std::string_view user_text;
  std::vector<std::string_view> placeholders;
};

std::span<const PromptTemplate> all_templates();
const PromptTemplate& prompt_template(TemplateId id);
std::optional<TemplateId> template_by_name(std::string_view name);
std::string_view template_name(TemplateId id);

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

/// Substitutes every declared placeholder. vars must cover exactly the
/// declared set: a missing placeholder or an unknown extra key is an
/// error.
RenderedPrompt render_prompt(TemplateId id,
                             const std::map<std::string, std::string>& vars);

}  // namespace mmrag
