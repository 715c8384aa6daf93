#include "mmrag/prompts.hpp"

#include <array>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

constexpr std::string_view kRefinerSystem =
    "Character Introduction\n"
    "You are an expert in generating queries for encyclopedic retrieval. You "
    "first think about the reasoning process in the mind and then provide the "
    "user with the answer. Given a question about the given image <image>, "
    "your task is to retain the original query while expanding it with "
    "additional relevant information derived from both the visual content and "
    "world knowledge, to retrieve documents that best answer the question.\n"
    "\n"
    "Response Format\n"
    "Show your work in <think> </think> tags. Your final response must be in "
    "JSON format within <answer> </answer> tags. For example,\n"
    "<answer>\n"
    "{\n"
    "    \"query\": \"....\"\n"
    "}\n"
    "</answer>.";

constexpr std::string_view kRefinerUser =
    "Here's the user query: {Query}\n"
    "Assistant: Let me think step by step. <think>";

constexpr std::string_view kInspectorSystem =
    "Character Introduction\n"
    "You are an assistant to determine the consistency and completeness of "
    "the provided context in relation to a question and an image <image>. You "
    "will receive a question and a retrieved context. Follow these steps:\n"
    "1. Check if the context is consistent with both the image and the "
    "question.\n"
    "2. Determine if the context contains the answer to the question.\n"
    "Response Format\n"
    "If both conditions are satisfied, respond with:\n"
    "{\n"
    "    \"pass\": \"true\"\n"
    "}\n"
    "If either condition is not satisfied, respond with:\n"
    "{\n"
    "    \"pass\": \"false\",\n"
    "    \"answer\": \"predicted answer\"\n"
    "}\n"
    "Be concise and ensure your responses are in JSON format.";

constexpr std::string_view kInspectorUser =
    "Question: {Query}\n"
    "Retrieved Context: {Context}";

constexpr std::string_view kGeneratorEvqaSystem =
    "You are a helpful assistant for answering encyclopedic questions.If the "
    "context does not contain the information required to answer the "
    "question, you should answer the question using internal model knowledge.";

constexpr std::string_view kGeneratorEvqaUser =
    "Context: {Context}\n"
    "Question: {Question}\n"
    "The answer is:";

constexpr std::string_view kGeneratorInfoseekSystem =
    "You are a helpful assistant for answering encyclopedic questions. Do not "
    "answer anything else.If you need to answer questions about numbers or "
    "time, please output the corresponding numerical format directly.If the "
    "context does not contain the information required to answer the "
    "question, you should answer the question using internal model knowledge.";

constexpr std::string_view kGeneratorInfoseekUser =
    "Context: {Context}\n"
    "Question: {Question}\n"
    "Just answer the questions , no explanations needed. Short answer is:";

constexpr std::string_view kSummarizerSystem =
    "Summarize the following Wikipedia section concisely while preserving key "
    "information.";

constexpr std::string_view kSummarizerUser =
    "Article: {title}\n"
    "Section: {section_title}\n"
    "Content: {section_text}\n"
    "Provide a concise summary:";

constexpr std::string_view kAnswerExpansionSystem =
    "Character Introduction\n"
    "Given a question and its short answer, expand the answer into a complete "
    "sentence while keeping the original answer intact. Expand the answer "
    "into a natural, complete sentence that includes the original answer.\n"
    "\n"
    "Response Format\n"
    "Return your response in JSON format. Output format:\n"
    "{\n"
    "    \"expanded_answer\": \"your expanded sentence here\"\n"
    "}";

constexpr std::string_view kAnswerExpansionUser =
    "Question: {question}\n"
    "Original Answer: {original_answer}";

constexpr std::string_view kCaptionExpansionSystem =
    "Character Introduction\n"
    "You are an expert in generating queries for encyclopedic retrieval. "
    "Given a question about the given image, you should:\n"
    "1. Concisely caption the image which is most relevant to the question.\n"
    "2. Retain the original query while expanding it with additional relevant "
    "information derived from both the visual content and world knowledge, to "
    "retrieve documents that best answer the question.\n"
    "Response Format\n"
    "Your final response must be in JSON format. For example:\n"
    "{\n"
    "    \"caption\": \"...\",\n"
    "    \"query\": \"...\"\n"
    "}";

constexpr std::string_view kCaptionExpansionUser =
    "Here's the user query: {query}";

const std::array<PromptTemplate, 7>& templates() {
  static const std::array<PromptTemplate, 7> kTemplates = {{
      {TemplateId::kRefiner, "REFINER", kRefinerSystem, kRefinerUser, {"Query"}},
      {TemplateId::kInspector, "INSPECTOR", kInspectorSystem, kInspectorUser,
       {"Query", "Context"}},
      {TemplateId::kGeneratorEvqa, "GENERATOR_EVQA", kGeneratorEvqaSystem,
       kGeneratorEvqaUser, {"Context", "Question"}},
      {TemplateId::kGeneratorInfoseek, "GENERATOR_INFOSEEK",
       kGeneratorInfoseekSystem, kGeneratorInfoseekUser, {"Context", "Question"}},
      {TemplateId::kSummarizer, "SUMMARIZER", kSummarizerSystem, kSummarizerUser,
       {"title", "section_title", "section_text"}},
      {TemplateId::kAnswerExpansion, "ANSWER_EXPANSION", kAnswerExpansionSystem,
       kAnswerExpansionUser, {"question", "original_answer"}},
      {TemplateId::kCaptionExpansion, "CAPTION_EXPANSION",
       kCaptionExpansionSystem, kCaptionExpansionUser, {"query"}},
  }};
  return kTemplates;
}

// Single pass over the template text: substituted values are never
// re-scanned, so a value containing "{Question}" stays literal.
std::string substitute(std::string_view text, const PromptTemplate& tpl,
                       const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool replaced = false;
    if (text[i] == '{') {
      for (const std::string_view p : tpl.placeholders) {
        if (text.size() - i >= p.size() + 2 && text[i + 1 + p.size()] == '}' &&
            text.substr(i + 1, p.size()) == p) {
          out += vars.at(std::string(p));
          i += p.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::span<const PromptTemplate> all_templates() { return templates(); }

const PromptTemplate& prompt_template(TemplateId id) {
  for (const PromptTemplate& t : templates()) {
    if (t.id == id) return t;
  }
  throw Error("unknown_template", "no such template id");
}

std::optional<TemplateId> template_by_name(std::string_view name) {
  for (const PromptTemplate& t : templates()) {
    if (t.name == name) return t.id;
  }
  return std::nullopt;
}

std::string_view template_name(TemplateId id) { return prompt_template(id).name; }

RenderedPrompt render_prompt(TemplateId id,
                             const std::map<std::string, std::string>& vars) {
  const PromptTemplate& tpl = prompt_template(id);
  for (const auto& [key, value] : vars) {
    bool declared = false;
    for (const std::string_view p : tpl.placeholders) {
      if (p == key) declared = true;
    }
    if (!declared) {
      throw Error("unknown_placeholder",
                  std::string(tpl.name) + " has no placeholder named '" + key + "'");
    }
  }
  for (const std::string_view p : tpl.placeholders) {
    if (!vars.contains(std::string(p))) {
      throw Error("missing_placeholder",
                  std::string(tpl.name) + " requires '{" + std::string(p) + "}'");
    }
  }
  return RenderedPrompt{std::string(tpl.system_text),
                        substitute(tpl.user_text, tpl, vars)};
}

}  // namespace mmrag
