#include "mmrag/pipeline_config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& object, const char* key, T& out,
                const std::string& path) {
  if (!object.contains(key)) return;
  try {
    out = object.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("config_invalid", path + " has the wrong type");
  }
}

void apply_fusion(const json& object, FusionConfig& cfg) {
  read_field(object, "alpha", cfg.alpha, "fusion.alpha");
  read_field(object, "d_vis", cfg.d_vis, "fusion.d_vis");
  read_field(object, "d_text", cfg.d_text, "fusion.d_text");
  read_field(object, "per_modality_normalize", cfg.per_modality_normalize,
             "fusion.per_modality_normalize");
}

void apply_weights(const json& object, FusionWeights& cfg) {
  read_field(object, "beta1", cfg.beta1, "weights.beta1");
  read_field(object, "beta2", cfg.beta2, "weights.beta2");
}

void apply_kb_build(const json& object, KbBuildConfig& cfg) {
  read_field(object, "summary_threshold_tokens", cfg.summary_threshold_tokens,
             "kb_build.summary_threshold_tokens");
  read_field(object, "low_info_min_tokens", cfg.low_info_min_tokens,
             "kb_build.low_info_min_tokens");
  if (object.contains("blocklist_titles")) {
    if (!object["blocklist_titles"].is_array()) {
      throw Error("config_invalid", "kb_build.blocklist_titles must be an array");
    }
    cfg.blocklist_titles.clear();
    for (const json& t : object["blocklist_titles"]) {
      cfg.blocklist_titles.insert(t.get<std::string>());
    }
  }
}

void apply_grpo(const json& object, GrpoConfig& cfg) {
  read_field(object, "group_size", cfg.group_size, "grpo.group_size");
  read_field(object, "clip_epsilon", cfg.clip_epsilon, "grpo.clip_epsilon");
  read_field(object, "kl_coef", cfg.kl_coef, "grpo.kl_coef");
  read_field(object, "learning_rate", cfg.learning_rate, "grpo.learning_rate");
  read_field(object, "steps", cfg.steps, "grpo.steps");
  read_field(object, "sample_temperature", cfg.sample_temperature,
             "grpo.sample_temperature");
  read_field(object, "seed", cfg.seed, "grpo.seed");
}

void apply_gateway(const json& object, GatewayConfig& cfg) {
  if (object.contains("mode")) {
    const std::string mode = object["mode"].get<std::string>();
    if (mode == "stub") {
      cfg.mode = GatewayMode::kStub;
    } else if (mode == "remote") {
      cfg.mode = GatewayMode::kRemote;
    } else {
      throw Error("config_invalid", "gateway.mode must be 'stub' or 'remote'");
    }
  }
  read_field(object, "endpoint_url", cfg.endpoint_url, "gateway.endpoint_url");
  read_field(object, "auth_token_env_var", cfg.auth_token_env_var,
             "gateway.auth_token_env_var");
  read_field(object, "timeout_ms", cfg.timeout_ms, "gateway.timeout_ms");
  read_field(object, "max_retries", cfg.max_retries, "gateway.max_retries");
  read_field(object, "max_concurrent_requests", cfg.max_concurrent_requests,
             "gateway.max_concurrent_requests");
  read_field(object, "stub_seed", cfg.stub_seed, "gateway.stub_seed");
  read_field(object, "d_vis", cfg.d_vis, "gateway.d_vis");
  read_field(object, "d_text", cfg.d_text, "gateway.d_text");
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  validate(cfg.fusion);
  validate(cfg.weights);
  validate(cfg.kb_build);
  validate(cfg.grpo);
  validate(cfg.gateway);
  if (cfg.retrieval_k < 1) {
    throw Error("config_invalid", "retrieval_k must be >= 1");
  }
  if (cfg.reward_depth < 1) {
    throw Error("config_invalid", "reward_depth must be >= 1");
  }
  if (cfg.fusion.d_vis != cfg.gateway.d_vis ||
      cfg.fusion.d_text != cfg.gateway.d_text) {
    throw Error("config_invalid",
                "fusion.d_vis/d_text must match gateway.d_vis/d_text");
  }
}

PipelineConfig profile_defaults(std::string_view profile) {
  PipelineConfig cfg;
  if (profile == "evqa") {
    cfg.fusion.alpha = 0.59;
    cfg.weights.beta1 = 0.6;
    cfg.weights.beta2 = 0.2;
    cfg.generator_template = TemplateId::kGeneratorEvqa;
  } else if (profile == "infoseek") {
    cfg.fusion.alpha = 0.63;
    cfg.weights.beta1 = 0.8;
    cfg.weights.beta2 = 0.2;
    cfg.generator_template = TemplateId::kGeneratorInfoseek;
  } else {
    throw Error("config_invalid",
                "unknown profile '" + std::string(profile) +
                    "' (expected 'evqa' or 'infoseek')");
  }
  return cfg;
}

PipelineConfig parse_pipeline_config(
    const std::string& json_text,
    const std::optional<std::string>& profile_override) {
  const json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("config_invalid", "config file is not a JSON object");
  }

  std::string profile = "evqa";
  if (doc.contains("profile")) profile = doc["profile"].get<std::string>();
  if (profile_override.has_value()) profile = *profile_override;

  PipelineConfig cfg = profile_defaults(profile);
  if (doc.contains("fusion")) apply_fusion(doc["fusion"], cfg.fusion);
  if (doc.contains("weights")) apply_weights(doc["weights"], cfg.weights);
  if (doc.contains("kb_build")) apply_kb_build(doc["kb_build"], cfg.kb_build);
  if (doc.contains("grpo")) apply_grpo(doc["grpo"], cfg.grpo);
  if (doc.contains("gateway")) apply_gateway(doc["gateway"], cfg.gateway);
  read_field(doc, "retrieval_k", cfg.retrieval_k, "retrieval_k");
  read_field(doc, "reward_depth", cfg.reward_depth, "reward_depth");
  if (doc.contains("generator_template")) {
    const std::string name = doc["generator_template"].get<std::string>();
    const auto id = template_by_name(name);
    if (!id.has_value()) {
      throw Error("config_invalid", "generator_template '" + name + "' unknown");
    }
    cfg.generator_template = *id;
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_pipeline_config(
    const std::filesystem::path& path,
    const std::optional<std::string>& profile_override) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_pipeline_config(text, profile_override);
}

}  // namespace mmrag
