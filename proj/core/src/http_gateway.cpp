#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gateway_detail.hpp"
#include "mmrag/gateway.hpp"

namespace mmrag::detail {

namespace {

using nlohmann::json;

constexpr int kBackoffBaseMs = 50;
constexpr int kBackoffCapMs = 1000;

bool transient_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

/// JSON-over-HTTP client for the chat / embeddings / rerank endpoints.
/// Wire schema follows the de-facto conventions (messages array with
/// role/content; embeddings in a `data` array; rerank `results` with
/// index + relevance_score), so any commodity inference server works.
/// Transient failures (connect error, timeout, 429, 5xx) retry with
/// exponential backoff up to max_retries; other statuses fail fast.
class HttpGateway final : public Gateway {
 public:
  explicit HttpGateway(GatewayConfig cfg)
      : cfg_(std::move(cfg)),
        slots_(cfg_.max_concurrent_requests) {
    if (!cfg_.auth_token_env_var.empty()) {
      if (const char* token = std::getenv(cfg_.auth_token_env_var.c_str())) {
        auth_token_ = token;
      }
    }
  }

  std::string chat(const ChatRequest& request) override {
    json body;
    body["messages"] = json::array();
    for (const ChatMessage& m : request.messages) {
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (request.image_ref) body["image_ref"] = *request.image_ref;

    const json reply = post_json("/v1/chat/completions", body);
    if (!reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() ||
        !reply["choices"][0].contains("message") ||
        !reply["choices"][0]["message"].contains("content") ||
        !reply["choices"][0]["message"]["content"].is_string()) {
      throw GatewayError("gateway_malformed_response",
                         "chat reply lacks choices[0].message.content");
    }
    return reply["choices"][0]["message"]["content"].get<std::string>();
  }

  EmbeddingVector embed_text(const std::string& text) override {
    return embed("mmrag-text-embed", text);
  }

  EmbeddingVector embed_image(const std::string& image_ref) override {
    return embed("mmrag-image-embed", image_ref);
  }

  std::vector<double> rerank(const std::string& query,
                             const std::vector<std::string>& passages) override {
    json body;
    body["query"] = query;
    body["documents"] = passages;
    const json reply = post_json("/v1/rerank", body);
    if (!reply.contains("results") || !reply["results"].is_array()) {
      throw GatewayError("gateway_malformed_response", "rerank reply lacks results");
    }
    std::vector<double> scores(passages.size(), 0.0);
    std::size_t filled = 0;
    for (const json& r : reply["results"]) {
      if (!r.contains("index") || !r.contains("relevance_score")) {
        throw GatewayError("gateway_malformed_response", "rerank result entry malformed");
      }
      const std::size_t idx = r["index"].get<std::size_t>();
      if (idx >= scores.size()) {
        throw GatewayError("gateway_malformed_response", "rerank index out of range");
      }
      scores[idx] = r["relevance_score"].get<double>();
      ++filled;
    }
    if (filled != passages.size()) {
      throw GatewayError("gateway_malformed_response",
                         "rerank reply covers " + std::to_string(filled) + " of " +
                             std::to_string(passages.size()) + " passages");
    }
    return scores;
  }

 private:
  EmbeddingVector embed(const std::string& model, const std::string& input) {
    json body;
    body["model"] = model;
    body["input"] = json::array({input});
    const json reply = post_json("/v1/embeddings", body);
    if (!reply.contains("data") || !reply["data"].is_array() ||
        reply["data"].empty() || !reply["data"][0].contains("embedding") ||
        !reply["data"][0]["embedding"].is_array()) {
      throw GatewayError("gateway_malformed_response",
                         "embeddings reply lacks data[0].embedding");
    }
    EmbeddingVector out;
    for (const json& v : reply["data"][0]["embedding"]) {
      out.values.push_back(static_cast<float>(v.get<double>()));
    }
    if (out.empty()) {
      throw GatewayError("gateway_malformed_response", "empty embedding");
    }
    return out;
  }

  json post_json(const std::string& path, const json& body) {
    const std::string payload = body.dump();
    std::string last_failure = "no attempt made";

    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        const int delay =
            std::min(kBackoffCapMs, kBackoffBaseMs * (1 << (attempt - 1)));
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }

      slots_.acquire();
      httplib::Result res = [&] {
        // One client per request: httplib clients are not safe for
        // concurrent calls, and connections here are short-lived.
        httplib::Client client(cfg_.endpoint_url);
        client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
        client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
        client.set_write_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!auth_token_.empty()) {
          headers.emplace("Authorization", "Bearer " + auth_token_);
        }
        return client.Post(path, headers, payload, "application/json");
      }();
      slots_.release();

      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        continue;  // connect failure / timeout: transient
      }
      if (res->status >= 200 && res->status < 300) {
        json reply = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (reply.is_discarded()) {
          throw GatewayError("gateway_malformed_response",
                             "non-JSON body from " + path);
        }
        return reply;
      }
      if (transient_status(res->status)) {
        last_failure = "status " + std::to_string(res->status);
        continue;
      }
      throw GatewayError("gateway_status",
                         path + " returned status " + std::to_string(res->status));
    }
    throw GatewayError("gateway_timeout",
                       path + " failed after " +
                           std::to_string(cfg_.max_retries + 1) + " attempts (" +
                           last_failure + ")");
  }

  GatewayConfig cfg_;
  std::string auth_token_;
  std::counting_semaphore<> slots_;
};

}  // namespace

std::unique_ptr<Gateway> make_http_gateway(const GatewayConfig& cfg) {
  return std::make_unique<HttpGateway>(cfg);
}

}  // namespace mmrag::detail
