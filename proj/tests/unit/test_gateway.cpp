#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "prism/errors.hpp"
#include "prism/eval/random.hpp"
#include "prism/gateway.hpp"
#include "prism/mock_responder.hpp"
#include "prism/prompts.hpp"
#include "support/temp_dir.hpp"

using namespace prism;

namespace {

std::string completion(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}
      .dump();
}

/// Replays a script of outcomes; an empty body means "throw a timeout".
class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::deque<HttpResponse> script) : script_(std::move(script)) {}

  HttpResponse post_json(const std::string& url,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         const std::string& body, std::chrono::milliseconds) override {
    std::lock_guard lock(mutex_);
    ++calls;
    last_url = url;
    last_headers = headers;
    last_body = body;
    if (script_.empty()) return {200, completion("default")};
    auto next = script_.front();
    script_.pop_front();
    if (next.status == 0) throw TransportTimeout("timed out");
    if (next.status == -1) throw std::runtime_error("connection refused");
    return next;
  }

  std::atomic<int> calls{0};
  std::string last_url;
  std::vector<std::pair<std::string, std::string>> last_headers;
  std::string last_body;

 private:
  std::mutex mutex_;
  std::deque<HttpResponse> script_;
};

GatewayConfig live_config() {
  GatewayConfig c;
  c.mode = GatewayMode::live;
  c.base_url = "http://model.test/v1";
  c.api_key = "k";
  c.retry.base_backoff = std::chrono::milliseconds(500);
  c.retry.max_jitter = std::chrono::milliseconds(0);
  return c;
}

}  // namespace

TEST_CASE("request tags are content hashes") {
  const auto a = compute_request_tag("m", "sys", "user", 0.0);
  CHECK(a.size() == 64);
  CHECK(a == compute_request_tag("m", "sys", "user", 0.0));
  CHECK(a != compute_request_tag("m", "sys", "user2", 0.0));
  CHECK(a != compute_request_tag("m", "sys", "user", 0.5));
  CHECK(make_chat_request("m", "sys", "user").request_tag == a);
}

TEST_CASE("request body and completion text") {
  const auto req = make_chat_request("m", "sys", "hello");
  const auto body = nlohmann::json::parse(chat_completions_body(req));
  CHECK(body["model"] == "m");
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][1]["content"] == "hello");
  CHECK(extract_completion_text(completion("hi")) == "hi");
  CHECK_FALSE(extract_completion_text("{\"error\": 1}").has_value());
  CHECK_FALSE(extract_completion_text("not json").has_value());
}

TEST_CASE("retries 429 and 5xx with exponential backoff") {
  auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
      {429, "slow down"}, {503, "busy"}, {0, ""}, {200, completion("ok")}});
  std::vector<long long> sleeps;
  LlmGateway gw(live_config(), transport, {},
                [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  CHECK(gw.complete(gw.make_request("s", "u")) == "ok");
  CHECK(transport->calls == 4);
  CHECK(sleeps == std::vector<long long>{500, 1000, 2000});
  CHECK(gw.stats().retries == 3);
  CHECK(transport->last_url == "http://model.test/v1/chat/completions");
  CHECK(transport->last_headers.at(0).second == "Bearer k");
}

TEST_CASE("gives up after max retries") {
  auto transport = std::make_shared<ScriptedTransport>(
      std::deque<HttpResponse>{{500, ""}, {500, ""}, {500, ""}, {500, ""}, {200, completion("late")}});
  LlmGateway gw(live_config(), transport, {}, [](auto) {});
  try {
    gw.complete(gw.make_request("s", "u"));
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.status() == 500);
  }
  CHECK(transport->calls == 4);
}

TEST_CASE("client errors are not retried") {
  auto transport =
      std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{401, "no"}, {200, "x"}});
  LlmGateway gw(live_config(), transport, {}, [](auto) {});
  CHECK_THROWS_AS(gw.complete(gw.make_request("s", "u")), GatewayError);
  CHECK(transport->calls == 1);
}

TEST_CASE("connection failures are retried") {
  auto transport = std::make_shared<ScriptedTransport>(
      std::deque<HttpResponse>{{-1, ""}, {200, completion("ok")}});
  LlmGateway gw(live_config(), transport, {}, [](auto) {});
  CHECK(gw.complete(gw.make_request("s", "u")) == "ok");
}

TEST_CASE("jitter stays within bounds") {
  auto cfg = live_config();
  cfg.retry.max_jitter = std::chrono::milliseconds(100);
  auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
      {500, ""}, {500, ""}, {500, ""}, {500, ""}});
  std::vector<long long> sleeps;
  LlmGateway gw(cfg, transport, {}, [&](auto d) { sleeps.push_back(d.count()); });
  CHECK_THROWS(gw.complete(gw.make_request("s", "u")));
  REQUIRE(sleeps.size() == 3);
  CHECK(sleeps[0] >= 500);
  CHECK(sleeps[0] <= 600);
  CHECK(sleeps[2] >= 2000);
  CHECK(sleeps[2] <= 2100);
}

TEST_CASE("record then replay without network") {
  test::TempDir dir;
  const auto fixture = dir.path() / "fx.jsonl";
  auto cfg = live_config();
  cfg.mode = GatewayMode::record;
  cfg.fixture_path = fixture.string();
  auto transport = std::make_shared<ScriptedTransport>(
      std::deque<HttpResponse>{{200, completion("first")}, {200, completion("second")}});
  const auto r1 = make_chat_request(cfg.model, "s", "one");
  const auto r2 = make_chat_request(cfg.model, "s", "two");
  {
    LlmGateway rec(cfg, transport, {}, [](auto) {});
    CHECK(rec.complete(r1) == "first");
    CHECK(rec.complete(r2) == "second");
  }

  auto counting = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{});
  cfg.mode = GatewayMode::replay;
  LlmGateway replay(cfg, counting);
  CHECK(replay.complete(r2) == "second");
  CHECK(replay.complete(r1) == "first");
  CHECK(counting->calls == 0);
  CHECK(replay.stats().replay_hits == 2);
  CHECK(replay.stats().network_attempts == 0);

  const auto miss = make_chat_request(cfg.model, "s", "three");
  try {
    replay.complete(miss);
    FAIL("expected a fixture miss");
  } catch (const FixtureMissError& e) {
    CHECK(e.tag() == miss.request_tag);
    CHECK(std::string(e.what()).find(miss.request_tag) != std::string::npos);
  }
  CHECK(counting->calls == 0);
}

TEST_CASE("malformed fixture line is a config error") {
  test::TempDir dir;
  const auto fixture = dir.path() / "bad.jsonl";
  std::ofstream(fixture) << "{not json\n";
  CHECK_THROWS_AS(ReplayFixture(fixture.string()), ConfigError);
  CHECK(ReplayFixture((dir.path() / "absent.jsonl").string()).size() == 0);
}

TEST_CASE("mode requirements are checked up front") {
  GatewayConfig c;
  c.mode = GatewayMode::live;
  CHECK_THROWS_AS(LlmGateway(c, nullptr), ConfigError);
  c.mode = GatewayMode::replay;
  CHECK_THROWS_AS(LlmGateway(c, nullptr), ConfigError);
  c.mode = GatewayMode::mock;
  CHECK_THROWS_AS(LlmGateway(c, nullptr), ConfigError);
  CHECK(parse_mode("replay") == GatewayMode::replay);
  CHECK_FALSE(parse_mode("offline").has_value());
}

TEST_CASE("in-flight requests are bounded") {
  class SlowTransport : public HttpTransport {
   public:
    HttpResponse post_json(const std::string&, const std::vector<std::pair<std::string, std::string>>&,
                           const std::string&, std::chrono::milliseconds) override {
      const int now = ++active;
      int seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      --active;
      return {200, completion("ok")};
    }
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
  };
  auto transport = std::make_shared<SlowTransport>();
  auto cfg = live_config();
  cfg.max_in_flight = 2;
  LlmGateway gw(cfg, transport);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { gw.complete(gw.make_request("s", std::to_string(i))); });
  }
  for (auto& t : threads) t.join();
  CHECK(transport->peak.load() <= 2);
}

TEST_CASE("mock replies follow the expert response schema") {
  PerDimension<std::vector<Lexicon::Entry>> e;
  e[Dimension::violence] = {{"kill", 0.7}};
  e[Dimension::insult] = {{"idiot", 0.6}};
  auto lexicon = std::make_shared<Lexicon>(e);
  auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{});
  GatewayConfig cfg;
  LlmGateway gw(cfg, transport, make_mock_responder(lexicon));

  eval::Rng rng(3);
  const std::vector<std::string> words{"kill", "idiot", "the", "cat", "sat", "today"};
  for (int i = 0; i < 100; ++i) {
    std::string text;
    for (std::uint64_t w = 0; w <= rng.below(8); ++w) text += words[rng.below(words.size())] + " ";
    const auto kind = static_cast<ExpertKind>(rng.below(4));
    const auto reply = gw.complete(
        gw.make_request(std::string(prompts::base_prompt(kind)), prompts::task_text(text)));
    const auto j = nlohmann::json::parse(reply);
    REQUIRE(j.is_object());
    REQUIRE((j.at("decision") == "hate" || j.at("decision") == "neutral"));
    REQUIRE(j.at("severities").size() == kDimensionCount);
    for (Dimension d : kAllDimensions) {
      const double v = j.at("severities").at(std::string(dimension_name(d))).get<double>();
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
    REQUIRE(j.at("confidence").get<double>() >= 0.0);
    REQUIRE(j.at("reasoning").is_string());
    REQUIRE_NOTHROW(parse_expert_response(reply, kind));
  }
  CHECK(transport->calls == 0);
  CHECK(gw.stats().mock_responses == 100);
}
