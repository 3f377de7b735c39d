#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prism/gateway.hpp"
#include "prism/orchestrator.hpp"

namespace prism {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_path = ":memory:";
  GatewayConfig gateway;
  std::string prior_path;
  std::string lexicon_path;
  std::string calibration_path;
  std::string corpus_path;
  /// Stamp every record with the epoch (deterministic test mode).
  bool fixed_clock = false;

  /// Gateway variables plus PRISM_STORE_PATH, PRISM_CORPUS_PATH,
  /// PRISM_BIND ("host:port"), PRISM_PRIOR_PATH, PRISM_LEXICON_PATH,
  /// PRISM_CALIBRATION_PATH and PRISM_FIXED_CLOCK=1. Unset variables keep
  /// the values already in `base`.
  static ServiceConfig from_env(ServiceConfig base);
  static ServiceConfig from_env();
};

struct CorpusItem {
  std::string content_id;
  std::string text;
};

/// [{"content_id": ..., "text": ...}, ...]
std::vector<CorpusItem> load_corpus(const std::string& path);

struct ServiceResponse {
  int status = 200;
  std::string body;
};

/// Transport-independent request handlers behind the /v1 endpoints.
class PrismService {
 public:
  PrismService(OrchestratorDeps deps, std::optional<std::vector<CorpusItem>> corpus = std::nullopt,
               LearningConfig learning = {});

  /// Wires store, gateway, lexicon, calibration, prior and corpus from the
  /// configured paths. A mock gateway is given the lexicon as its responder.
  static std::shared_ptr<PrismService> from_config(const ServiceConfig& config);

  /// POST /v1/filter {user_id, content_id, text}
  ServiceResponse handle_filter(const std::string& body);

  /// POST /v1/feedback {user_id, content_id, label, severities?, text?}
  ServiceResponse handle_feedback(const std::string& body);

  /// GET /v1/profiles/{user_id}?init=
  ServiceResponse handle_get_profile(const std::string& user_id, bool init);

  /// GET /v1/queue/{user_id}?limit=&reveal=
  ServiceResponse handle_queue(const std::string& user_id, std::size_t limit, bool reveal);

  Orchestrator& orchestrator() noexcept { return orchestrator_; }
  ProfileStore& store() noexcept { return *orchestrator_.deps().store; }

 private:
  Orchestrator orchestrator_;
  std::optional<std::vector<CorpusItem>> corpus_;
  LearningConfig learning_;
};

/// Response body of a successful /v1/filter call.
ordered_json filter_response(const ModerationDecision& decision, const LearningConfig& learning = {});

/// Serves the four /v1 endpoints (and GET /healthz) over HTTP/1.1.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<PrismService> service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);

  /// Blocks until stop().
  void listen();

  /// listen() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prism
