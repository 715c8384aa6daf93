#include "mmrag/stub_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "mmrag/hashing.hpp"
#include "mmrag/prompts.hpp"
#include "mmrag/rng.hpp"
#include "mmrag/text.hpp"

namespace mmrag {

namespace {

// Field value between `label` and the next label (or end). Uses the last
// occurrence of the trailing label so field values containing label-like
// text still parse.
std::string_view field_between(std::string_view text, std::string_view label,
                               std::string_view next_label) {
  const std::size_t start = text.find(label);
  if (start == std::string_view::npos) return {};
  const std::size_t value_begin = start + label.size();
  std::size_t value_end = text.size();
  if (!next_label.empty()) {
    const std::size_t stop = text.rfind(next_label);
    if (stop != std::string_view::npos && stop >= value_begin) value_end = stop;
  }
  return text.substr(value_begin, value_end - value_begin);
}

std::string first_clause(std::string_view text) {
  std::size_t end = text.size();
  for (const char stop : {'.', '\n', ';'}) {
    const std::size_t pos = text.find(stop);
    if (pos != std::string_view::npos) end = std::min(end, pos);
  }
  std::string_view clause = text.substr(0, end);
  while (!clause.empty() && clause.front() == ' ') clause.remove_prefix(1);
  while (!clause.empty() && clause.back() == ' ') clause.remove_suffix(1);
  return std::string(clause);
}

std::string first_tokens(std::string_view text, std::size_t limit) {
  const auto tokens = split_whitespace(text);
  std::string out;
  for (std::size_t i = 0; i < std::min(limit, tokens.size()); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string hex8(std::uint64_t h) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08llx",
                static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

std::string json_quote(std::string_view s) {
  return nlohmann::json(std::string(s)).dump();
}

}  // namespace

StubModel::StubModel(std::uint64_t seed, std::size_t d_vis, std::size_t d_text)
    : seed_(seed), d_vis_(d_vis), d_text_(d_text) {}

std::string StubModel::chat(const std::string& system_text,
                            const std::string& user_text) const {
  const PromptTemplate* tpl = nullptr;
  for (const PromptTemplate& t : all_templates()) {
    if (t.system_text == system_text) {
      tpl = &t;
      break;
    }
  }
  if (tpl == nullptr) {
    return "stub-response-" +
           hex8(fnv1a64(user_text, fnv1a64(system_text, fnv1a64_u64(seed_))));
  }

  switch (tpl->id) {
    case TemplateId::kRefiner: {
      const std::string_view query =
          field_between(user_text, "Here's the user query: ", "\nAssistant:");
      return "<think>identify the pictured entity and keep the original "
             "question terms</think><answer>{\"query\": " +
             json_quote(query) + "}</answer>";
    }
    case TemplateId::kInspector: {
      const std::string_view question =
          field_between(user_text, "Question: ", "\nRetrieved Context: ");
      const std::string_view context =
          field_between(user_text, "\nRetrieved Context: ", "");
      const std::string context_lower = ascii_lower(context);
      bool pass = false;
      for (const std::string_view token : split_whitespace(ascii_lower(question))) {
        if (token.size() >= 4 &&
            context_lower.find(token) != std::string::npos) {
          pass = true;
          break;
        }
      }
      if (pass) return "{\"pass\": \"true\"}";
      const std::string answer =
          "entity-" + hex8(fnv1a64(question, fnv1a64_u64(seed_)));
      return "{\"pass\": \"false\", \"answer\": " + json_quote(answer) + "}";
    }
    case TemplateId::kGeneratorEvqa:
    case TemplateId::kGeneratorInfoseek: {
      const std::string_view context =
          field_between(user_text, "Context: ", "\nQuestion: ");
      const std::string clause = first_clause(context);
      return clause.empty() ? "unknown" : clause;
    }
    case TemplateId::kSummarizer: {
      const std::string_view content =
          field_between(user_text, "Content: ", "\nProvide a concise summary:");
      return first_tokens(content, 24);
    }
    case TemplateId::kAnswerExpansion: {
      const std::string_view original =
          field_between(user_text, "Original Answer: ", "");
      return "{\"expanded_answer\": " +
             json_quote("The answer is " + std::string(original) + ".") + "}";
    }
    case TemplateId::kCaptionExpansion: {
      const std::string_view query =
          field_between(user_text, "Here's the user query: ", "");
      const std::string caption =
          "image-" + hex8(fnv1a64(query, fnv1a64_u64(seed_)));
      return "{\"caption\": " + json_quote(caption) +
             ", \"query\": " + json_quote(query) + "}";
    }
  }
  return "unknown";
}

EmbeddingVector StubModel::token_bag_embedding(std::string_view tag,
                                               std::string_view input,
                                               std::size_t dim,
                                               bool tokenize) const {
  std::vector<double> accum(dim, 0.0);
  const std::uint64_t base = fnv1a64(tag, fnv1a64_u64(seed_));

  const auto add_component = [&](std::string_view piece) {
    SplitMix64 stream(fnv1a64(piece, base));
    for (std::size_t d = 0; d < dim; ++d) {
      accum[d] += 2.0 * stream.next_unit() - 1.0;
    }
  };

  bool added = false;
  if (tokenize) {
    const std::string lowered = ascii_lower(input);
    for (const std::string_view token : split_whitespace(lowered)) {
      add_component(token);
      added = true;
    }
  }
  if (!added) add_component(input);

  double norm_sq = 0.0;
  for (const double v : accum) norm_sq += v * v;
  double norm = std::sqrt(norm_sq);
  if (norm == 0.0) {
    accum[0] = 1.0;
    norm = 1.0;
  }
  EmbeddingVector out;
  out.values.reserve(dim);
  for (const double v : accum) out.values.push_back(static_cast<float>(v / norm));
  return out;
}

EmbeddingVector StubModel::embed_text(std::string_view text) const {
  return token_bag_embedding("text", text, d_text_, /*tokenize=*/true);
}

EmbeddingVector StubModel::embed_image(std::string_view image_ref) const {
  return token_bag_embedding("image", image_ref, d_vis_, /*tokenize=*/false);
}

std::vector<double> StubModel::rerank(std::string_view query,
                                      std::span<const std::string> passages) const {
  const EmbeddingVector q = embed_text(query);
  std::vector<double> scores;
  scores.reserve(passages.size());
  for (const std::string& p : passages) {
    scores.push_back(cosine_similarity(q, embed_text(p)));
  }
  return scores;
}

}  // namespace mmrag
