#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmrag/embedding.hpp"
#include "mmrag/error.hpp"
#include "mmrag/prompts.hpp"

namespace mmrag {

enum class GatewayMode { kRemote, kStub };

struct GatewayConfig {
  std::string endpoint_url;  // e.g. "http://127.0.0.1:8089"
  std::string auth_token_env_var = "MMRAG_API_TOKEN";
  int timeout_ms = 10000;
  int max_retries = 2;
  int max_concurrent_requests = 4;
  GatewayMode mode = GatewayMode::kStub;
  std::uint64_t stub_seed = 0;
  // Embedding dims served in stub mode (remote servers define their own).
  std::size_t d_vis = 64;
  std::size_t d_text = 64;
};

/// Throws Error("config_invalid", ...) naming the offending field.
void validate(const GatewayConfig& cfg);

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  /// Opaque image locator for multimodal models; carried out-of-band next
  /// to the messages. Stub mode ignores it.
  std::optional<std::string> image_ref;
};

class GatewayError : public Error {
 public:
  using Error::Error;
};

/// Uniform client surface for every remote model in the pipeline: chat
/// completion (refiner/inspector/generator/summarizer), text and image
/// embedding, and passage reranking. Implementations are safe for
/// unrestricted concurrent use; the remote implementation bounds in-flight
/// requests internally.
class Gateway {
 public:
  virtual ~Gateway() = default;

  virtual std::string chat(const ChatRequest& request) = 0;
  virtual EmbeddingVector embed_text(const std::string& text) = 0;
  virtual EmbeddingVector embed_image(const std::string& image_ref) = 0;
  virtual std::vector<double> rerank(const std::string& query,
                                     const std::vector<std::string>& passages) = 0;

  /// render_prompt + chat in one call.
  std::string chat_template(TemplateId id,
                            const std::map<std::string, std::string>& vars,
                            double temperature = 0.0,
                            std::optional<std::string> image_ref = std::nullopt);
};

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& cfg);

}  // namespace mmrag
