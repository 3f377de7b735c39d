#include <fstream>
#include <set>

#include "doctest.h"
#include "prism/mock_responder.hpp"
#include "prism/orchestrator.hpp"
#include "prism/prompts.hpp"

using namespace prism;

namespace {

SeverityVector sev(std::initializer_list<std::pair<Dimension, double>> values) {
  PerDimension<double> p{0.0};
  for (auto [d, v] : values) p[d] = v;
  return SeverityVector(p);
}

ExpertAnalysis analysis(ExpertKind k, Label l, SeverityVector s = {}, double c = 0.8) {
  ExpertAnalysis a;
  a.expert = k;
  a.decision = l;
  a.severities = s;
  a.confidence = c;
  return a;
}

std::shared_ptr<Lexicon> test_lexicon() {
  PerDimension<std::vector<Lexicon::Entry>> e;
  e[Dimension::insult] = {{"idiot", 0.6}};
  e[Dimension::violence] = {{"kill", 0.7}, {"hurt", 0.3}};
  e[Dimension::dehumanise] = {{"vermin", 0.8}};
  return std::make_shared<Lexicon>(e);
}

OrchestratorDeps mock_deps(MockResponder responder = {}) {
  auto lexicon = test_lexicon();
  OrchestratorDeps deps;
  deps.store = make_memory_store();
  deps.lexicon = lexicon;
  deps.gateway = std::make_shared<LlmGateway>(
      GatewayConfig{}, nullptr, responder ? responder : make_mock_responder(lexicon));
  deps.clock = fixed_clock(Timestamp{});
  return deps;
}

}  // namespace

TEST_CASE("expert selection") {
  const PerDimension<double> no_weights{0.0};
  CHECK(select_experts(sev({{Dimension::violence, 0.9}}), no_weights) ==
        std::vector<ExpertKind>{ExpertKind::psychologist});
  CHECK(select_experts(SeverityVector::zeros(), no_weights) ==
        std::vector<ExpertKind>{ExpertKind::sociologist});

  const auto all = select_experts(
      sev({{Dimension::insult, 0.8}, {Dimension::dehumanise, 0.7}, {Dimension::violence, 0.6}}),
      no_weights);
  CHECK(all == std::vector<ExpertKind>{ExpertKind::linguist, ExpertKind::sociologist,
                                       ExpertKind::psychologist});

  PerDimension<double> w{0.0};
  w[Dimension::status] = 0.8;
  CHECK(select_experts(SeverityVector::zeros(), w) ==
        std::vector<ExpertKind>{ExpertKind::sociologist});
  CHECK(expert_relevance(ExpertKind::sociologist, SeverityVector::zeros(), w) ==
        doctest::Approx(0.2));
}

TEST_CASE("every dimension has exactly one owner") {
  std::multiset<Dimension> seen;
  for (auto k : kDomainExperts) {
    for (auto d : owned_dimensions(k)) seen.insert(d);
  }
  CHECK(seen.size() == kDimensionCount);
  for (auto d : kAllDimensions) CHECK(seen.count(d) == 1);
  CHECK(owned_dimensions(ExpertKind::ghost).empty());
}

TEST_CASE("manager proposals") {
  auto p = parse_manager_proposal(R"({"experts": ["linguist", "psychologist"], "summary": "x"})");
  REQUIRE(p);
  CHECK(p->experts.size() == 2);
  CHECK_FALSE(parse_manager_proposal(R"({"experts": []})"));
  CHECK_FALSE(parse_manager_proposal(R"({"experts": ["ghost"]})"));
  CHECK_FALSE(parse_manager_proposal(R"({"experts": ["linguist", "linguist"]})"));
  CHECK_FALSE(parse_manager_proposal("nothing"));
}

TEST_CASE("dynamic context") {
  auto profile = init_profile("u", PopulationPrior{});
  profile.thresholds[Dimension::dehumanise] = 0.15;
  profile.confidence = PerDimension<double>{1.0};
  profile.samples = 100;
  const auto ctx = build_dynamic_context(profile, PopulationPrior{}, ExpertKind::sociologist);
  CHECK(ctx.focus_dimensions.front() == Dimension::dehumanise);
  CHECK(ctx.rendered_text.find("0.15") != std::string::npos);
  CHECK(ctx.rendered_text.find("highly sensitive") != std::string::npos);
  CHECK(ctx.rendered_text.find("Profile confidence") == std::string::npos);
  CHECK(ctx.rendered_text.find("toxicity") == std::string::npos);

  profile.confidence = PerDimension<double>{0.35};
  const auto low = build_dynamic_context(profile, PopulationPrior{}, ExpertKind::sociologist);
  CHECK(low.rendered_text.find("Profile confidence: 0.35") != std::string::npos);

  PopulationPrior prior;
  prior.thresholds = PerDimension<double>{0.7};
  const auto fresh = init_profile("f", prior);
  const auto cold = build_dynamic_context(fresh, prior, ExpertKind::linguist);
  CHECK(cold.rendered_text.find("threshold 0.70 (tolerant)") != std::string::npos);
  CHECK(effective_thresholds(fresh, prior) == prior.thresholds);

  const auto full = render_full_profile(fresh, prior);
  for (auto d : kAllDimensions) {
    CHECK(full.find(std::string(dimension_name(d)) + ":") != std::string::npos);
  }
}

TEST_CASE("ghost invocation rule") {
  const auto f = analysis(ExpertKind::linguist, Label::flag);
  const auto k = analysis(ExpertKind::psychologist, Label::keep);
  CHECK_FALSE(decide_ghost_invocation(std::vector{f, f}));
  CHECK(decide_ghost_invocation(std::vector{f, k}));
  CHECK_FALSE(decide_ghost_invocation(std::vector{f}));
  CHECK_FALSE(decide_ghost_invocation(std::vector<ExpertAnalysis>{}));
}

TEST_CASE("ghost analysis") {
  PopulationPrior prior;
  auto profile = init_profile("g", prior);
  CHECK(ghost_analysis(profile, prior, SeverityVector(PerDimension<double>{0.4})).decision ==
        Label::keep);
  CHECK(ghost_analysis(profile, prior, SeverityVector(PerDimension<double>{0.5})).decision ==
        Label::keep);

  profile.thresholds[Dimension::violence] = 0.15;
  profile.confidence = PerDimension<double>{1.0};
  const auto g = ghost_analysis(profile, prior, sev({{Dimension::violence, 0.3}}));
  CHECK(g.decision == Label::flag);
  CHECK(g.expert == ExpertKind::ghost);
  CHECK(g.reasoning.find("violence") != std::string::npos);
}

TEST_CASE("synthesis") {
  PopulationPrior prior;
  auto profile = init_profile("s", prior);

  SUBCASE("at threshold everywhere is shown") {
    const auto d = synthesize(
        std::vector{analysis(ExpertKind::linguist, Label::flag, SeverityVector(PerDimension<double>{0.5}))},
        profile, prior);
    CHECK(d.score == doctest::Approx(0.0));
    CHECK(d.verdict == Verdict::show);
  }
  SUBCASE("one dimension above a low threshold hides") {
    prior.thresholds = PerDimension<double>{0.5};
    prior.thresholds[Dimension::violence] = 0.2;
    profile = init_profile("s", prior);
    auto s = PerDimension<double>{0.5};
    s[Dimension::violence] = 0.9;
    const auto d = synthesize(std::vector{analysis(ExpertKind::psychologist, Label::flag,
                                                   SeverityVector(s))},
                              profile, prior);
    CHECK(d.score == doctest::Approx(0.07));
    CHECK(d.verdict == Verdict::hide);
    CHECK(d.effective_threshold_excess[Dimension::violence] == doctest::Approx(0.7));
  }
  SUBCASE("zero confidence analyses carry no weight") {
    const auto a = analysis(ExpertKind::linguist, Label::flag, sev({{Dimension::insult, 0.9}}), 1.0);
    const auto b = analysis(ExpertKind::sociologist, Label::keep, sev({{Dimension::status, 0.4}}), 0.0);
    CHECK(consensus(std::vector{a, b}) == a.severities);
  }
  SUBCASE("weights normalise") {
    PerDimension<double> w{0.0};
    w[Dimension::insult] = 0.3;
    w[Dimension::status] = 0.1;
    const auto n = normalized_weights(w);
    CHECK(n[Dimension::insult] == doctest::Approx(0.75));
    CHECK(normalized_weights(PerDimension<double>{0.0})[Dimension::genocide] ==
          doctest::Approx(0.1));
  }
}

TEST_CASE("mock pipeline") {
  Orchestrator orch(mock_deps());

  SUBCASE("unknown user gets a profile and a benign item is shown") {
    const auto d = orch.moderate({"new_user", "c1", "a quiet afternoon in the park"});
    CHECK(d.verdict == Verdict::show);
    CHECK(d.score <= 0.0);
    CHECK(d.transcript.selected_experts.size() == 1);
    CHECK_FALSE(d.transcript.ghost_invoked);
    CHECK(orch.deps().store->load_profile("new_user").has_value());
    CHECK(orch.deps().store->latest_decision("new_user", "c1").has_value());
  }
  SUBCASE("disagreeing experts bring in the ghost") {
    const auto d = orch.moderate({"u", "c2", "you idiot, someone could get hurt"});
    CHECK(d.transcript.selected_experts ==
          std::vector<ExpertKind>{ExpertKind::linguist, ExpertKind::psychologist});
    CHECK(d.transcript.ghost_invoked);
    REQUIRE(d.transcript.analyses.size() == 3);
    CHECK(d.transcript.analyses.back().expert == ExpertKind::ghost);
  }
  SUBCASE("agreeing experts do not") {
    const auto d = orch.moderate({"u", "c3", "kill the vermin"});
    CHECK(d.transcript.selected_experts.size() == 2);
    CHECK_FALSE(d.transcript.ghost_invoked);
  }
  SUBCASE("invalid request") {
    CHECK_THROWS_AS(orch.moderate({"", "c", "t"}), ValidationError);
    CHECK_THROWS_AS(orch.moderate({"u", "", "t"}), ValidationError);
  }
}

TEST_CASE("decisions are deterministic") {
  Orchestrator a(mock_deps());
  Orchestrator b(mock_deps());
  const ModerationRequest req{"u", "c", "kill that idiot"};
  CHECK(to_json(a.moderate(req)).dump() == to_json(b.moderate(req)).dump());
}

TEST_CASE("unusable expert replies") {
  SUBCASE("every expert failing is a decision error") {
    Orchestrator orch(mock_deps([](const ChatRequest&) { return std::string("no idea"); }));
    try {
      orch.moderate({"u", "c", "idiot"});
      FAIL("expected DecisionError");
    } catch (const DecisionError& e) {
      CHECK_FALSE(e.transcript().warnings.empty());
    }
  }
  SUBCASE("a partial failure becomes a warning") {
    auto lexicon = test_lexicon();
    auto inner = make_mock_responder(lexicon);
    Orchestrator orch(mock_deps([inner](const ChatRequest& r) {
      if (r.system_text == prompts::base_prompt(ExpertKind::psychologist)) return std::string("?");
      return inner(r);
    }));
    const auto d = orch.moderate({"u", "c", "you idiot, someone could get hurt"});
    CHECK(d.transcript.analyses.size() == 1);
    CHECK_FALSE(d.transcript.warnings.empty());
    CHECK_FALSE(d.transcript.ghost_invoked);
  }
}

TEST_CASE("single-agent baseline sees the whole profile") {
  std::string seen;
  auto lexicon = test_lexicon();
  auto inner = make_mock_responder(lexicon);
  Orchestrator orch(mock_deps([&](const ChatRequest& r) {
    seen = r.user_text;
    return inner(r);
  }));
  const auto profile = init_profile("u", PopulationPrior{});
  const auto r = orch.classify_single_agent(profile, "kill");
  CHECK(r.decision == Label::flag);
  for (auto d : kAllDimensions) CHECK(seen.find(dimension_name(d)) != std::string::npos);
}

TEST_CASE("replay fixture drives the pipeline with zero network") {
  const std::string dir = PRISM_TEST_DATA_DIR;
  const auto doc = nlohmann::json::parse(std::ifstream(dir + "/replay_scenarios.json"));
  REQUIRE(doc["scenarios"].size() == 10);

  class NoNetwork : public HttpTransport {
   public:
    HttpResponse post_json(const std::string&, const std::vector<std::pair<std::string, std::string>>&,
                           const std::string&, std::chrono::milliseconds) override {
      ++calls;
      throw std::runtime_error("network disabled");
    }
    int calls = 0;
  };

  auto run = [&] {
    auto transport = std::make_shared<NoNetwork>();
    GatewayConfig gc;
    gc.mode = GatewayMode::replay;
    gc.fixture_path = dir + "/replay_fixture.jsonl";
    gc.base_url = "http://unreachable.invalid";
    gc.model = doc["model"];
    OrchestratorDeps deps;
    deps.store = make_memory_store();
    deps.prior = prior_from_json(doc["prior"]);
    deps.lexicon = std::make_shared<Lexicon>(Lexicon::load(std::string(PRISM_DATA_DIR) + "/lexicon.json"));
    deps.gateway = std::make_shared<LlmGateway>(gc, transport);
    deps.clock = fixed_clock(Timestamp{});
    Orchestrator orch(deps);
    std::vector<std::string> out;
    for (const auto& s : doc["scenarios"]) {
      const auto d = orch.moderate({doc["user_id"], s["content_id"], s["text"]});
      CHECK(d.transcript.ghost_invoked == s["expect_ghost"].get<bool>());
      out.push_back(to_json(d).dump());
    }
    CHECK(transport->calls == 0);
    return out;
  };
  const auto first = run();
  const auto second = run();
  CHECK(first == second);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i] == doc["scenarios"][i]["decision"].get<std::string>());
  }
}
