#include "mmrag/gateway.hpp"

#include "gateway_detail.hpp"
#include "mmrag/stub_model.hpp"

namespace mmrag {

void validate(const GatewayConfig& cfg) {
  if (cfg.timeout_ms <= 0) {
    throw Error("config_invalid", "gateway.timeout_ms must be > 0");
  }
  if (cfg.max_retries < 0) {
    throw Error("config_invalid", "gateway.max_retries must be >= 0");
  }
  if (cfg.max_concurrent_requests < 1) {
    throw Error("config_invalid", "gateway.max_concurrent_requests must be >= 1");
  }
  if (cfg.d_vis < 1) throw Error("config_invalid", "gateway.d_vis must be >= 1");
  if (cfg.d_text < 1) throw Error("config_invalid", "gateway.d_text must be >= 1");
  if (cfg.mode == GatewayMode::kRemote && cfg.endpoint_url.empty()) {
    throw Error("config_invalid",
                "gateway.endpoint_url is required in remote mode");
  }
}

std::string Gateway::chat_template(TemplateId id,
                                   const std::map<std::string, std::string>& vars,
                                   double temperature,
                                   std::optional<std::string> image_ref) {
  const RenderedPrompt prompt = render_prompt(id, vars);
  ChatRequest request;
  request.messages.push_back({"system", prompt.system_text});
  request.messages.push_back({"user", prompt.user_text});
  request.temperature = temperature;
  request.image_ref = std::move(image_ref);
  return chat(request);
}

namespace {

class StubGateway final : public Gateway {
 public:
  explicit StubGateway(const GatewayConfig& cfg)
      : model_(cfg.stub_seed, cfg.d_vis, cfg.d_text) {}

  std::string chat(const ChatRequest& request) override {
    std::string system, user;
    for (const ChatMessage& m : request.messages) {
      if (m.role == "system") system = m.content;
      if (m.role == "user") user = m.content;
    }
    return model_.chat(system, user);
  }

  EmbeddingVector embed_text(const std::string& text) override {
    return model_.embed_text(text);
  }

  EmbeddingVector embed_image(const std::string& image_ref) override {
    return model_.embed_image(image_ref);
  }

  std::vector<double> rerank(const std::string& query,
                             const std::vector<std::string>& passages) override {
    return model_.rerank(query, passages);
  }

 private:
  StubModel model_;
};

}  // namespace

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& cfg) {
  validate(cfg);
  if (cfg.mode == GatewayMode::kStub) {
    return std::make_unique<StubGateway>(cfg);
  }
  return detail::make_http_gateway(cfg);
}

}  // namespace mmrag
