#include "prism/gateway.hpp"

#include <openssl/sha.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "prism/errors.hpp"

namespace prism {

std::string_view mode_name(GatewayMode mode) noexcept {
  switch (mode) {
    case GatewayMode::live: return "live";
    case GatewayMode::record: return "record";
    case GatewayMode::replay: return "replay";
    case GatewayMode::mock: return "mock";
  }
  return "unknown";
}

std::optional<GatewayMode> parse_mode(std::string_view text) noexcept {
  for (GatewayMode m : {GatewayMode::live, GatewayMode::record, GatewayMode::replay, GatewayMode::mock}) {
    if (mode_name(m) == text) return m;
  }
  return std::nullopt;
}

std::string compute_request_tag(std::string_view model, std::string_view system_text,
                                std::string_view user_text, double temperature) {
  const nlohmann::json key = nlohmann::json::array(
      {std::string(model), std::string(system_text), std::string(user_text), temperature});
  const std::string canonical = key.dump();
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    hex.push_back(kHex[b >> 4]);
    hex.push_back(kHex[b & 0xf]);
  }
  return hex;
}

ChatRequest make_chat_request(std::string model, std::string system_text, std::string user_text,
                              double temperature, int max_tokens) {
  ChatRequest r;
  r.request_tag = compute_request_tag(model, system_text, user_text, temperature);
  r.model = std::move(model);
  r.system_text = std::move(system_text);
  r.user_text = std::move(user_text);
  r.temperature = temperature;
  r.max_tokens = max_tokens;
  return r;
}

std::string chat_completions_body(const ChatRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::ordered_json::array();
  if (!request.system_text.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", request.system_text}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", request.user_text}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

std::optional<std::string> extract_completion_text(std::string_view body) {
  const auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  const auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    return std::nullopt;
  }
  return first["message"]["content"].get<std::string>();
}

// ---------------------------------------------------------------------------
// Transport

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& url,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         const std::string& body, std::chrono::milliseconds timeout) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::runtime_error("URL lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto result = client.Post(path, hdrs, body, "application/json");
    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write ||
          err == httplib::Error::ConnectionTimeout) {
        throw TransportTimeout("request to " + url + " timed out");
      }
      throw std::runtime_error("request to " + url + " failed: " + httplib::to_string(err));
    }
    return {result->status, result->body};
  }
};

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

// ---------------------------------------------------------------------------
// Fixture

ReplayFixture::ReplayFixture(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("tag") || !parsed.contains("body")) {
      throw ConfigError("fixture " + path_ + " line " + std::to_string(line_no) + " is malformed");
    }
    entries_.emplace(parsed["tag"].get<std::string>(),
                     Entry{parsed.value("status", 200), parsed["body"].get<std::string>()});
  }
}

std::optional<ReplayFixture::Entry> ReplayFixture::find(const std::string& tag) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(tag);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool ReplayFixture::append(const std::string& tag, const Entry& entry) {
  std::lock_guard lock(mutex_);
  if (!entries_.emplace(tag, entry).second) return false;
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw StorageError("cannot append to fixture " + path_);
    nlohmann::ordered_json line;
    line["tag"] = tag;
    line["status"] = entry.status;
    line["body"] = entry.body;
    out << line.dump() << '\n';
    out.flush();
    if (!out) throw StorageError("write to fixture " + path_ + " failed");
  }
  return true;
}

std::size_t ReplayFixture::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Gateway

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig config;
  const auto get = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = get("PRISM_LLM_BASE_URL")) config.base_url = *v;
  if (auto v = get("PRISM_LLM_API_KEY")) config.api_key = *v;
  if (auto v = get("PRISM_MODEL")) config.model = *v;
  if (auto v = get("PRISM_FIXTURE_PATH")) config.fixture_path = *v;
  if (auto v = get("PRISM_MODE")) {
    const auto mode = parse_mode(*v);
    if (!mode) throw ConfigError("PRISM_MODE must be one of live, record, replay, mock");
    config.mode = *mode;
  }
  return config;
}

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<HttpTransport> transport,
                       MockResponder mock, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      mock_(std::move(mock)),
      sleeper_(std::move(sleeper)),
      fixture_(config_.fixture_path),
      in_flight_(std::clamp(config_.max_in_flight, 1, 1024)),
      jitter_rng_(config_.jitter_seed) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  switch (config_.mode) {
    case GatewayMode::live:
    case GatewayMode::record:
      if (config_.base_url.empty()) {
        throw ConfigError("live and record modes require PRISM_LLM_BASE_URL");
      }
      if (!transport_) throw ConfigError("live and record modes require a transport");
      if (config_.mode == GatewayMode::record && config_.fixture_path.empty()) {
        throw ConfigError("record mode requires PRISM_FIXTURE_PATH");
      }
      break;
    case GatewayMode::replay:
      if (config_.fixture_path.empty()) throw ConfigError("replay mode requires PRISM_FIXTURE_PATH");
      break;
    case GatewayMode::mock:
      if (!mock_) throw ConfigError("mock mode requires a mock responder");
      break;
  }
}

ChatRequest LlmGateway::make_request(std::string system_text, std::string user_text) const {
  return make_chat_request(config_.model, std::move(system_text), std::move(user_text));
}

GatewayStats LlmGateway::stats() const {
  return {network_attempts_.load(), retries_.load(), replay_hits_.load(), mock_responses_.load()};
}

std::string LlmGateway::text_of(const std::string& body) const {
  // Non-conforming bodies are handed through so the response parser can
  // report them with the raw text attached.
  if (auto text = extract_completion_text(body)) return *text;
  return body;
}

std::chrono::milliseconds LlmGateway::backoff_delay(int retry_index) {
  const double base = static_cast<double>(config_.retry.base_backoff.count()) *
                      std::pow(config_.retry.backoff_factor, retry_index);
  std::uint64_t jitter = 0;
  if (config_.retry.max_jitter.count() > 0) {
    std::lock_guard lock(rng_mutex_);
    jitter = jitter_rng_() % static_cast<std::uint64_t>(config_.retry.max_jitter.count() + 1);
  }
  return std::chrono::milliseconds(static_cast<long long>(base) + static_cast<long long>(jitter));
}

std::string LlmGateway::complete(const ChatRequest& request) {
  switch (config_.mode) {
    case GatewayMode::mock:
      ++mock_responses_;
      return mock_(request);
    case GatewayMode::replay: {
      const auto entry = fixture_.find(request.request_tag);
      if (!entry) throw FixtureMissError(request.request_tag);
      ++replay_hits_;
      if (entry->status != 200) {
        throw GatewayError("recorded response for " + request.request_tag + " has status " +
                               std::to_string(entry->status),
                           entry->status);
      }
      return text_of(entry->body);
    }
    case GatewayMode::live:
    case GatewayMode::record:
      return complete_live(request);
  }
  throw GatewayError("unknown gateway mode");
}

std::string LlmGateway::complete_live(const ChatRequest& request) {
  struct Slot {
    std::counting_semaphore<1024>& sem;
    explicit Slot(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
  } slot(in_flight_);

  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  const std::string url = config_.base_url + "/chat/completions";
  const std::string body = chat_completions_body(request);

  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      sleeper_(backoff_delay(attempt - 1));
    }
    ++network_attempts_;
    try {
      const HttpResponse response =
          transport_->post_json(url, headers, body, config_.retry.attempt_timeout);
      if (response.status == 200) {
        if (config_.mode == GatewayMode::record) {
          fixture_.append(request.request_tag, {response.status, response.body});
        }
        return text_of(response.body);
      }
      last_status = response.status;
      last_error = "HTTP " + std::to_string(response.status);
      if (!retryable_status(response.status)) break;
    } catch (const TransportTimeout& e) {
      last_error = e.what();
    } catch (const std::runtime_error& e) {
      last_error = e.what();
    }
  }
  throw GatewayError("chat completion failed for " + request.request_tag + ": " + last_error,
                     last_status);
}

}  // namespace prism
