#include "doctest.h"
#include "httplib.h"
#include "prism/mock_responder.hpp"
#include "prism/service.hpp"

using namespace prism;
using nlohmann::json;

namespace {

std::shared_ptr<Lexicon> lexicon() {
  PerDimension<std::vector<Lexicon::Entry>> e;
  e[Dimension::violence] = {{"kill", 0.7}, {"hurt", 0.3}};
  e[Dimension::insult] = {{"idiot", 0.6}};
  return std::make_shared<Lexicon>(e);
}

std::shared_ptr<PrismService> make_service(
    std::optional<std::vector<CorpusItem>> corpus = std::nullopt, GatewayConfig gc = {}) {
  auto lex = lexicon();
  OrchestratorDeps deps;
  deps.store = make_memory_store();
  deps.lexicon = lex;
  deps.gateway = std::make_shared<LlmGateway>(gc, nullptr, make_mock_responder(lex));
  deps.clock = fixed_clock(Timestamp{});
  return std::make_shared<PrismService>(deps, std::move(corpus));
}

std::string filter_body(const std::string& user, const std::string& id, const std::string& text) {
  return json{{"user_id", user}, {"content_id", id}, {"text", text}}.dump();
}

/// Makes violence the only thing this user cares about, fully learned.
void sensitise(PrismService& s, const std::string& user) {
  auto p = init_profile(user, PopulationPrior{});
  p.thresholds[Dimension::violence] = 0.1;
  p.weights[Dimension::violence] = 0.5;
  p.confidence = PerDimension<double>{1.0};
  p.samples = 100;
  s.store().save_profile(p);
}

}  // namespace

TEST_CASE("filter") {
  auto s = make_service();
  const auto ok = s->handle_filter(filter_body("u", "c1", "a calm morning"));
  CHECK(ok.status == 200);
  const auto j = json::parse(ok.body);
  CHECK(j["verdict"] == "show");
  CHECK(j["profile"]["samples"] == 0);
  CHECK(j["severities"].size() == kDimensionCount);

  CHECK(s->handle_filter(R"({"content_id": "c", "text": "t"})").status == 400);
  CHECK(s->handle_filter("not json").status == 400);
  CHECK(s->handle_filter(R"({"user_id": 5, "content_id": "c", "text": "t"})").status == 400);
}

TEST_CASE("filter hides for a sensitive user") {
  auto s = make_service();
  sensitise(*s, "v");
  const auto j = json::parse(s->handle_filter(filter_body("v", "c", "I will kill it")).body);
  CHECK(j["verdict"] == "hide");
  CHECK(j["score"].get<double>() > 0.0);
}

TEST_CASE("replay miss maps to 502 with the tag") {
  GatewayConfig gc;
  gc.mode = GatewayMode::replay;
  gc.fixture_path = "/nonexistent/fixture.jsonl";
  auto s = make_service(std::nullopt, gc);
  const auto r = s->handle_filter(filter_body("u", "c", "idiot"));
  CHECK(r.status == 502);
  CHECK(r.body.find("tag") != std::string::npos);
}

TEST_CASE("feedback") {
  auto s = make_service();
  REQUIRE(s->handle_filter(filter_body("u", "c1", "kill kill")).status == 200);

  const auto flagged =
      s->handle_feedback(json{{"user_id", "u"}, {"content_id", "c1"}, {"label", "flag"}}.dump());
  CHECK(flagged.status == 200);
  const auto j = json::parse(flagged.body);
  CHECK(j["samples"] == 1);
  bool violence_lowered = false;
  for (const auto& c : j["changed_thresholds"]) {
    CHECK(c["new"].get<double>() < c["old"].get<double>());
    if (c["dimension"] == "violence") violence_lowered = true;
  }
  CHECK_FALSE(violence_lowered);

  SUBCASE("keep on mild content changes nothing") {
    const auto k = s->handle_feedback(json{{"user_id", "u"},
                                           {"content_id", "c9"},
                                           {"label", "keep"},
                                           {"severities", to_json(SeverityVector::zeros())}}
                                          .dump());
    CHECK(k.status == 200);
    CHECK(json::parse(k.body)["changed_thresholds"].empty());
  }
  SUBCASE("no decision and no severities") {
    CHECK(s->handle_feedback(json{{"user_id", "u"}, {"content_id", "zz"}, {"label", "flag"}}.dump())
              .status == 404);
  }
  SUBCASE("bad label") {
    CHECK(s->handle_feedback(json{{"user_id", "u"}, {"content_id", "c1"}, {"label", "maybe"}}.dump())
              .status == 400);
  }
}

TEST_CASE("flag lowers the dominant threshold when it sits above the severity") {
  auto s = make_service();
  REQUIRE(s->handle_filter(filter_body("w", "c1", "hurt")).status == 200);
  const auto j = json::parse(
      s->handle_feedback(json{{"user_id", "w"}, {"content_id", "c1"}, {"label", "flag"}}.dump()).body);
  bool violence = false;
  for (const auto& c : j["changed_thresholds"]) {
    if (c["dimension"] == "violence") {
      violence = true;
      CHECK(c["new"].get<double>() < c["old"].get<double>());
    }
  }
  CHECK(violence);
}

TEST_CASE("profile endpoint") {
  auto s = make_service();
  CHECK(s->handle_get_profile("ghost", false).status == 404);
  const auto init = json::parse(s->handle_get_profile("fresh", true).body);
  CHECK(init["samples"] == 0);
  CHECK(init["thresholds"]["violence"] == 0.5);
  CHECK(init["descriptors"]["violence"]["threshold"] == "moderately sensitive");

  for (int i = 0; i < 3; ++i) {
    s->handle_feedback(json{{"user_id", "fresh"},
                            {"content_id", "c" + std::to_string(i)},
                            {"label", "flag"},
                            {"severities", to_json(SeverityVector::zeros())}}
                           .dump());
  }
  CHECK(json::parse(s->handle_get_profile("fresh", false).body)["samples"] == 3);
}

TEST_CASE("queue") {
  std::vector<CorpusItem> corpus{{"q1", "a calm morning"}, {"q2", "kill it"}, {"q3", "idiot"}};
  auto s = make_service(corpus);
  sensitise(*s, "v");

  const auto items = json::parse(s->handle_queue("v", 5, false).body)["items"];
  REQUIRE(items.size() == 3);
  CHECK(items[1]["content_id"] == "q2");
  CHECK(items[1]["verdict"] == "hide");
  CHECK(items[1]["text"].is_null());
  CHECK(items[1]["withheld"] == true);
  CHECK(items[0]["text"] == "a calm morning");

  const auto revealed = json::parse(s->handle_queue("v", 5, true).body)["items"];
  CHECK(revealed[1]["text"] == "kill it");
  CHECK(json::parse(s->handle_queue("v", 2, false).body)["items"].size() == 2);

  for (const auto* id : {"q1", "q2", "q3"}) {
    s->handle_feedback(json{{"user_id", "v"}, {"content_id", id}, {"label", "keep"}}.dump());
  }
  CHECK(json::parse(s->handle_queue("v", 5, false).body)["items"].empty());

  CHECK(make_service()->handle_queue("v", 5, false).status == 404);
}

TEST_CASE("http server") {
  std::vector<CorpusItem> corpus{{"q1", "kill it"}};
  HttpServer server(make_service(corpus));
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  server.start();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto filter = client.Post("/v1/filter", filter_body("h", "q1", "kill it"), "application/json");
  REQUIRE(filter);
  CHECK(filter->status == 200);
  CHECK(json::parse(filter->body)["content_id"] == "q1");
  CHECK(filter->get_header_value("Content-Type").find("application/json") != std::string::npos);

  auto bad = client.Post("/v1/filter", "{}", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto fb = client.Post("/v1/feedback",
                        json{{"user_id", "h"}, {"content_id", "q1"}, {"label", "flag"}}.dump(),
                        "application/json");
  REQUIRE(fb);
  CHECK(fb->status == 200);

  auto profile = client.Get("/v1/profiles/h");
  REQUIRE(profile);
  CHECK(json::parse(profile->body)["samples"] == 1);
  auto missing = client.Get("/v1/profiles/nobody");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto created = client.Get("/v1/profiles/nobody?init=true");
  REQUIRE(created);
  CHECK(created->status == 200);

  auto queue = client.Get("/v1/queue/other?limit=5&reveal=true");
  REQUIRE(queue);
  CHECK(json::parse(queue->body)["items"].size() == 1);

  server.stop();
}
