#include "mmrag/toy_env.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

using nlohmann::json;

std::string apply_pattern(const std::string& pattern, const std::string& query) {
  static constexpr std::string_view kSlot = "{query}";
  std::string out;
  out.reserve(pattern.size() + query.size());
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = pattern.find(kSlot, pos);
    if (hit == std::string::npos) {
      out.append(pattern, pos, std::string::npos);
      return out;
    }
    out.append(pattern, pos, hit - pos);
    out.append(query);
    pos = hit + kSlot.size();
  }
}

}  // namespace

ToyEnvSpec parse_toy_env_spec(const std::string& json_text) {
  const json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("env_invalid", "environment spec is not a JSON object");
  }
  ToyEnvSpec spec;
  for (const json& t : doc.value("templates", json::array())) {
    RewriteTemplateSpec tpl;
    tpl.name = t.value("name", "");
    tpl.pattern = t.value("pattern", "");
    tpl.malformed = t.value("malformed", false);
    if (tpl.name.empty()) throw Error("env_invalid", "template without a name");
    spec.templates.push_back(std::move(tpl));
  }
  for (const json& q : doc.value("queries", json::array())) {
    ToyEnvQuery query;
    query.text = q.value("text", "");
    query.gold_entity = q.value("gold_entity", "");
    if (query.text.empty() || query.gold_entity.empty()) {
      throw Error("env_invalid", "query needs text and gold_entity");
    }
    spec.queries.push_back(std::move(query));
  }
  for (const json& d : doc.value("documents", json::array())) {
    ToyEnvDocument document;
    document.entity_id = d.value("entity_id", "");
    document.text = d.value("text", "");
    if (document.entity_id.empty() || document.text.empty()) {
      throw Error("env_invalid", "document needs entity_id and text");
    }
    spec.documents.push_back(std::move(document));
  }
  if (spec.templates.size() < 2) {
    throw Error("env_invalid", "environment must define >= 2 templates");
  }
  if (spec.queries.empty()) throw Error("env_invalid", "environment has no queries");
  if (spec.documents.empty()) throw Error("env_invalid", "environment has no documents");
  return spec;
}

ToyEnvSpec load_toy_env_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_toy_env_spec(text);
}

TemplateRewriteEnv::TemplateRewriteEnv(ToyEnvSpec spec, std::uint64_t stub_seed,
                                       std::size_t embed_dim, int reward_depth)
    : spec_(std::move(spec)),
      model_(stub_seed, embed_dim, embed_dim),
      index_(embed_dim),
      reward_depth_(reward_depth) {
  if (spec_.templates.size() < 2) {
    throw Error("env_invalid", "environment must define >= 2 templates");
  }
  std::vector<KbEntry> entries;
  entries.reserve(spec_.documents.size());
  for (std::size_t i = 0; i < spec_.documents.size(); ++i) {
    const ToyEnvDocument& doc = spec_.documents[i];
    KbEntry entry;
    entry.entry_id = i;
    entry.entity_id = doc.entity_id;
    entry.article_id = doc.entity_id;
    entry.section_id = "s" + std::to_string(i);
    entry.section_text = doc.text;
    entry.vector = model_.embed_text(doc.text);
    entries.push_back(std::move(entry));
  }
  index_.add_entries(std::move(entries));
  index_.seal();
}

const std::string& TemplateRewriteEnv::action_name(std::size_t action) const {
  if (action >= spec_.templates.size()) {
    throw Error("invalid_action", "action index out of range");
  }
  return spec_.templates[action].name;
}

std::string TemplateRewriteEnv::rewritten_query(std::size_t query_index,
                                                std::size_t action) const {
  if (query_index >= spec_.queries.size()) {
    throw Error("invalid_action", "query index out of range");
  }
  if (action >= spec_.templates.size()) {
    throw Error("invalid_action", "action index out of range");
  }
  return apply_pattern(spec_.templates[action].pattern,
                       spec_.queries[query_index].text);
}

std::string TemplateRewriteEnv::rollout_text(std::size_t query_index,
                                             std::size_t action) const {
  const std::string rewritten = rewritten_query(query_index, action);
  const std::string payload =
      "{\"query\": " + nlohmann::json(rewritten).dump() + "}";
  std::string rollout = "<think>apply template " +
                        spec_.templates[action].name + "</think><answer>" +
                        payload;
  if (!spec_.templates[action].malformed) rollout += "</answer>";
  return rollout;
}

RewardRecord TemplateRewriteEnv::score_rollout(std::size_t query_index,
                                               std::size_t action) const {
  const RefinerOutput output = parse_refiner_output(rollout_text(query_index, action));
  if (!output.well_formed) {
    return total_reward(output, std::nullopt);
  }
  const EmbeddingVector query_vec = model_.embed_text(*output.refined_query);
  const std::vector<ScoredCandidate> hits = index_.search_topk(query_vec, index_.size());
  std::vector<std::string> entities;
  entities.reserve(hits.size());
  for (const ScoredCandidate& c : hits) {
    entities.push_back(index_.entry_meta(c.entry_id).entity_id);
  }
  const std::optional<int> rank = entity_hit_rank(
      entities, spec_.queries[query_index].gold_entity, reward_depth_);
  return total_reward(output, rank);
}

double TemplateRewriteEnv::rollout_reward(std::size_t query_index,
                                          std::size_t action) const {
  return score_rollout(query_index, action).total;
}

}  // namespace mmrag
