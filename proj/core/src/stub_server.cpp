#include "mmrag/stub_server.hpp"

#include <chrono>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {
using nlohmann::json;
}

StubServer::StubServer(const Options& options)
    : options_(options),
      model_(options.seed, options.d_vis, options.d_text),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

StubServer::~StubServer() { stop(); }

void StubServer::install_routes() {
  auto guarded = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      int peak = peak_.load();
      while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
      }
      if (options_.request_delay_ms > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.request_delay_ms));
      }
      if (!options_.auth_token.empty() &&
          req.get_header_value("Authorization") !=
              "Bearer " + options_.auth_token) {
        res.status = 401;
        res.set_content("{\"error\": \"unauthorized\"}", "application/json");
        --in_flight_;
        return;
      }
      json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
      if (body.is_discarded()) {
        res.status = 400;
        res.set_content("{\"error\": \"invalid json\"}", "application/json");
        --in_flight_;
        return;
      }
      try {
        handler(body, res);
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(json({{"error", e.what()}}).dump(), "application/json");
      }
      --in_flight_;
    };
  };

  server_->Post(
      "/v1/chat/completions", guarded([this](const json& body, httplib::Response& res) {
        std::string system, user;
        for (const json& m : body.value("messages", json::array())) {
          const std::string role = m.value("role", "");
          if (role == "system") system = m.value("content", "");
          if (role == "user") user = m.value("content", "");
        }
        const json reply = {
            {"choices",
             json::array({{{"message", {{"role", "assistant"},
                                        {"content", model_.chat(system, user)}}}}})}};
        res.set_content(reply.dump(), "application/json");
      }));

  server_->Post(
      "/v1/embeddings", guarded([this](const json& body, httplib::Response& res) {
        const std::string model_name = body.value("model", "mmrag-text-embed");
        json data = json::array();
        std::size_t index = 0;
        for (const json& item : body.value("input", json::array())) {
          const std::string input = item.get<std::string>();
          const EmbeddingVector emb = model_name == "mmrag-image-embed"
                                          ? model_.embed_image(input)
                                          : model_.embed_text(input);
          json values = json::array();
          // Serialize as doubles: float -> double is exact, so the client
          // recovers bit-identical float32 values.
          for (const float v : emb.values) values.push_back(static_cast<double>(v));
          data.push_back({{"index", index++}, {"embedding", std::move(values)}});
        }
        res.set_content(json({{"data", std::move(data)}}).dump(),
                        "application/json");
      }));

  server_->Post(
      "/v1/rerank", guarded([this](const json& body, httplib::Response& res) {
        const std::string query = body.value("query", "");
        std::vector<std::string> passages;
        for (const json& d : body.value("documents", json::array())) {
          passages.push_back(d.get<std::string>());
        }
        const std::vector<double> scores = model_.rerank(query, passages);
        json results = json::array();
        for (std::size_t i = 0; i < scores.size(); ++i) {
          results.push_back({{"index", i}, {"relevance_score", scores[i]}});
        }
        res.set_content(json({{"results", std::move(results)}}).dump(),
                        "application/json");
      }));

  server_->Get("/debug/concurrency",
               [this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(json({{"current", in_flight_.load()},
                                       {"peak", peak_.load()}})
                                     .dump(),
                                 "application/json");
               });

  server_->Post("/debug/reset",
                [this](const httplib::Request&, httplib::Response& res) {
                  peak_.store(0);
                  res.set_content("{}", "application/json");
                });
}

int StubServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("io", "stub server failed to bind");
  } else if (!server_->bind_to_port(host, port)) {
    throw Error("io", "stub server failed to bind port " + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void StubServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw Error("io", "stub server failed to listen on " + host + ":" +
                          std::to_string(port));
  }
}

void StubServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace mmrag
