#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mmrag/embedding.hpp"
#include "mmrag/gateway.hpp"
#include "mmrag/grpo.hpp"
#include "mmrag/kb_builder.hpp"
#include "mmrag/rerank.hpp"

namespace mmrag {

/// All pipeline knobs in one place. Dataset profiles pin the tuned
/// hyperparameter pairs: "evqa" (alpha 0.59, beta1 0.6, beta2 0.2) and
/// "infoseek" (alpha 0.63, beta1 0.8, beta2 0.2).
struct PipelineConfig {
  FusionConfig fusion;
  FusionWeights weights;
  KbBuildConfig kb_build;
  GrpoConfig grpo;
  GatewayConfig gateway;
  std::size_t retrieval_k = 20;
  int reward_depth = 200;
  TemplateId generator_template = TemplateId::kGeneratorEvqa;
};

/// Throws Error("config_invalid", ...) with the offending field path.
void validate(const PipelineConfig& cfg);

PipelineConfig profile_defaults(std::string_view profile);

/// Parses a config JSON document. Precedence inside the file: the
/// document's fields override its profile's defaults ("profile" key,
/// default "evqa"); profile_override beats the document's profile. CLI
/// flags are applied on top by the caller.
PipelineConfig parse_pipeline_config(
    const std::string& json_text,
    const std::optional<std::string>& profile_override = std::nullopt);

PipelineConfig load_pipeline_config(
    const std::filesystem::path& path,
    const std::optional<std::string>& profile_override = std::nullopt);

}  // namespace mmrag
