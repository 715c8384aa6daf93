#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "mmrag/stub_model.hpp"

namespace httplib {
class Server;
}

namespace mmrag {

/// Deterministic stub model behind the gateway's HTTP wire protocol:
/// POST /v1/chat/completions, /v1/embeddings, /v1/rerank, plus a
/// concurrency probe at GET /debug/concurrency ({"current","peak"}) and
/// POST /debug/reset. Responses are byte-compatible with the in-process
/// stub gateway for the same (seed, d_vis, d_text).
class StubServer {
 public:
  struct Options {
    std::uint64_t seed = 0;
    std::size_t d_vis = 64;
    std::size_t d_text = 64;
    /// Artificial per-request delay; lets tests observe the gateway's
    /// in-flight bound through the probe.
    int request_delay_ms = 0;
    /// Non-empty: require "Authorization: Bearer <token>".
    std::string auth_token;
  };

  explicit StubServer(const Options& options);
  ~StubServer();

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds and serves on a background thread. port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);

  /// Serves on the calling thread until stop() (CLI path).
  void run(const std::string& host, int port);

  void stop();

  int peak_concurrency() const { return peak_.load(); }

 private:
  void install_routes();

  Options options_;
  StubModel model_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

}  // namespace mmrag
