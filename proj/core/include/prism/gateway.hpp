#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prism {

enum class GatewayMode : std::uint8_t { live, record, replay, mock };

std::string_view mode_name(GatewayMode mode) noexcept;
std::optional<GatewayMode> parse_mode(std::string_view text) noexcept;

struct ChatRequest {
  std::string model;
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_tokens = 800;
  /// Content hash of (model, system_text, user_text, temperature).
  std::string request_tag;
};

/// Hex SHA-256 over a canonical JSON array of the four tagged fields.
std::string compute_request_tag(std::string_view model, std::string_view system_text,
                                std::string_view user_text, double temperature);

ChatRequest make_chat_request(std::string model, std::string system_text, std::string user_text,
                              double temperature = 0.0, int max_tokens = 800);

/// OpenAI-compatible request body: {model, messages, temperature, max_tokens}.
std::string chat_completions_body(const ChatRequest& request);

/// choices[0].message.content, or nullopt if the body has another shape.
std::optional<std::string> extract_completion_text(std::string_view body);

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Thrown by transports when an attempt exceeds its deadline.
class TransportTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;

  /// POSTs a JSON body. Throws TransportTimeout on timeout and
  /// std::runtime_error on connection failure.
  virtual HttpResponse post_json(const std::string& url,
                                 const std::vector<std::pair<std::string, std::string>>& headers,
                                 const std::string& body, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport (http:// and https://).
std::shared_ptr<HttpTransport> make_http_transport();

/// Line-delimited JSON fixture of recorded responses keyed by request tag:
/// {"tag": string, "status": int, "body": string} per line.
class ReplayFixture {
 public:
  struct Entry {
    int status = 200;
    std::string body;
  };

  ReplayFixture() = default;

  /// Loads an existing file (missing file = empty fixture) and remembers the
  /// path for appends. Throws ConfigError on a malformed line.
  explicit ReplayFixture(std::string path);

  std::optional<Entry> find(const std::string& tag) const;

  /// Appends to memory and, when backed by a file, to disk. Existing tags
  /// are left untouched; returns false in that case.
  bool append(const std::string& tag, const Entry& entry);

  std::size_t size() const;

 private:
  std::string path_;
  std::map<std::string, Entry> entries_;
  mutable std::mutex mutex_;
};

using MockResponder = std::function<std::string(const ChatRequest&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{500};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_jitter{100};
  std::chrono::milliseconds attempt_timeout{30000};
};

struct GatewayConfig {
  GatewayMode mode = GatewayMode::mock;
  std::string base_url;
  std::string api_key;
  std::string model = "gpt-4.1-mini";
  std::string fixture_path;
  int max_in_flight = 8;
  RetryPolicy retry;
  std::uint64_t jitter_seed = 0x5eed;

  /// PRISM_LLM_BASE_URL, PRISM_LLM_API_KEY, PRISM_MODEL, PRISM_MODE,
  /// PRISM_FIXTURE_PATH. Unset variables keep the defaults above.
  static GatewayConfig from_env();
};

struct GatewayStats {
  std::uint64_t network_attempts = 0;
  std::uint64_t retries = 0;
  std::uint64_t replay_hits = 0;
  std::uint64_t mock_responses = 0;
};

/// Chat-completion transport with retry, bounded concurrency and
/// record/replay. Safe to share between concurrent pipelines.
class LlmGateway {
 public:
  LlmGateway(GatewayConfig config, std::shared_ptr<HttpTransport> transport,
             MockResponder mock = {}, Sleeper sleeper = {});

  /// Returns the assistant text of the completion.
  ///
  /// live: POST with up to `max_retries` retries on timeout, 429 and 5xx.
  /// record: as live, then appends the raw response to the fixture.
  /// replay: fixture lookup only; FixtureMissError on a miss.
  /// mock: the mock responder's output; never touches the transport.
  std::string complete(const ChatRequest& request);

  ChatRequest make_request(std::string system_text, std::string user_text) const;

  GatewayMode mode() const noexcept { return config_.mode; }
  const GatewayConfig& config() const noexcept { return config_; }
  GatewayStats stats() const;

 private:
  std::string complete_live(const ChatRequest& request);
  std::string text_of(const std::string& body) const;
  std::chrono::milliseconds backoff_delay(int retry_index);

  GatewayConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  MockResponder mock_;
  Sleeper sleeper_;
  ReplayFixture fixture_;
  std::counting_semaphore<1024> in_flight_;
  std::mutex rng_mutex_;
  std::mt19937_64 jitter_rng_;
  std::atomic<std::uint64_t> network_attempts_{0};
  std::atomic<std::uint64_t> retries_{0};
  std::atomic<std::uint64_t> replay_hits_{0};
  std::atomic<std::uint64_t> mock_responses_{0};
};

}  // namespace prism
