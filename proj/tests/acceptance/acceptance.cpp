// One line per criterion: "criterion N PASS|FAIL <seconds>s <summary>".
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

#include "oracles/reference.hpp"
#include "prism/eval/experiment.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/eval/random.hpp"
#include "prism/eval/severity.hpp"
#include "prism/eval/synthetic.hpp"
#include "prism/orchestrator.hpp"
#include "prism/profile.hpp"
#include "prism/store.hpp"

using namespace prism;
using namespace prism::eval;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

struct Criterion {
  int id;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome formula_exactness() {
  Outcome o;
  o.require(confidence(100) == 1.0, "confidence(100) != 1");
  o.require(confidence(0) == 0.0, "confidence(0) != 0");
  o.require(std::abs(learning_rate(0.0) - 0.30) < 1e-15, "learning_rate(0) != 0.30");
  o.require(std::abs(learning_rate(1.0) - 0.10) < 1e-15, "learning_rate(1) != 0.10");
  o.detail = o.pass ? "confidence and learning rate endpoints exact" : o.detail;
  return o;
}

Outcome update_oracle() {
  Outcome o;
  Rng rng(20240601);
  std::size_t events = 0;
  for (int seq = 0; seq < 1000 && o.pass; ++seq) {
    PopulationPrior prior;
    for (auto& t : prior.thresholds) t = rng.uniform();
    ProfileRecord p = init_profile("a", prior);
    oracle::Profile ref{prior.thresholds.values(), 0};
    const auto len = rng.below(200) + 1;
    for (std::uint64_t i = 0; i < len && o.pass; ++i) {
      PerDimension<double> s;
      for (auto& v : s) v = rng.uniform();
      const bool flag = rng.below(2) == 0;
      const ProfileRecord before = p;
      p = apply_feedback(p, flag ? Label::flag : Label::keep, SeverityVector(s));
      oracle::update(ref, flag, s.values());
      ++events;
      for (Dimension d : kAllDimensions) {
        const double t = p.thresholds[d];
        o.require(std::abs(t - ref.t[index_of(d)]) <= 1e-9, "fold differs from reference");
        o.require(t >= 0.0 && t <= 1.0, "threshold left [0,1]");
        o.require(flag ? t <= before.thresholds[d] : t >= before.thresholds[d],
                  "threshold moved against the label");
      }
    }
  }
  if (o.pass) o.detail = "1000 sequences, " + std::to_string(events) + " updates match";
  return o;
}

Outcome weight_oracle() {
  Outcome o;
  Rng rng(99);
  for (int h = 0; h < 1000 && o.pass; ++h) {
    std::vector<SeverityVector> hist;
    std::vector<oracle::Vec> ref;
    const auto len = rng.below(120);
    for (std::uint64_t i = 0; i < len; ++i) {
      PerDimension<double> s;
      for (auto& v : s) v = rng.uniform();
      hist.emplace_back(s);
      ref.push_back(s.values());
    }
    const auto w = recompute_weights(hist);
    const auto expect = oracle::sigma(ref);
    for (Dimension d : kAllDimensions) {
      o.require(std::abs(w[d] - expect[index_of(d)]) <= 1e-9, "sigma mismatch");
    }
  }
  if (o.pass) o.detail = "1000 histories match two-pass sigma";
  return o;
}

Outcome metrics_anchor() {
  Outcome o;
  const auto m = metrics_from_confusion({750, 311, 2, 0});
  o.require(std::abs(m.hate.recall * 100 - 99.73) <= 0.01, "recall " + fmt("%.4f", m.hate.recall));
  o.require(std::abs(m.hate.precision * 100 - 70.69) <= 0.01,
            "precision " + fmt("%.4f", m.hate.precision));
  Rng rng(4);
  for (int i = 0; i < 1000 && o.pass; ++i) {
    const auto n = rng.below(100) + 1;
    std::vector<bool> p, g;
    std::vector<Label> pl, gl;
    for (std::uint64_t k = 0; k < n; ++k) {
      p.push_back(rng.below(2));
      g.push_back(rng.below(2));
      pl.push_back(p.back() ? Label::flag : Label::keep);
      gl.push_back(g.back() ? Label::flag : Label::keep);
    }
    const auto r = compute_metrics(pl, gl);
    const auto x = oracle::score(p, g);
    o.require(r.hate.precision == x.p_hate && r.hate.recall == x.r_hate && r.hate.f1 == x.f_hate &&
                  r.neutral.precision == x.p_neu && r.neutral.recall == x.r_neu &&
                  r.neutral.f1 == x.f_neu && r.macro_f1 == x.macro_f1 &&
                  r.accuracy == x.accuracy && r.cohen_kappa == x.kappa,
              "brute-force metrics differ");
  }
  if (o.pass) {
    o.detail = "recall " + fmt("%.2f%%", m.hate.recall * 100) + ", precision " +
               fmt("%.2f%%", m.hate.precision * 100) + ", 1000 random label sets exact";
  }
  return o;
}

std::vector<PoolEntry> synthetic_pool(std::size_t very_strict_cap, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PoolEntry> pool;
  std::size_t very_strict = 0;
  for (int i = 0; pool.size() < 2000; ++i) {
    auto c = kAllCategories[rng.below(5)];
    if (c == SeverityCategory::very_strict && very_strict >= very_strict_cap) continue;
    if (c == SeverityCategory::very_strict) ++very_strict;
    char id[16];
    std::snprintf(id, sizeof id, "ann%05d", i);
    pool.push_back({id, 10 + rng.below(16), c});
  }
  return pool;
}

Outcome stratified_selection() {
  Outcome o;
  const auto full = select_profiles(synthetic_pool(2000, 1), 100, 7);
  o.require(full.annotators.size() == 100, "full pool did not return 100");
  for (auto c : kAllCategories) {
    o.require(full.per_category.at(c) == 20, "category not at 20");
  }
  const auto capped = select_profiles(synthetic_pool(18, 2), 100, 7);
  o.require(capped.annotators.size() == 100, "capped pool did not return 100");
  o.require(capped.per_category.at(SeverityCategory::very_strict) == 18, "very strict not 18");
  o.require(capped.top_ups == 2, "expected 2 top-ups");
  o.require(select_profiles(synthetic_pool(2000, 1), 100, 7).annotators == full.annotators,
            "same seed gave a different selection");
  if (o.pass) o.detail = "100 at 20 per category; capped pool gives 18 + 2 top-ups; repeatable";
  return o;
}

Outcome categorisation_grid() {
  Outcome o;
  const std::vector<std::pair<double, SeverityCategory>> grid{
      {-1.5, SeverityCategory::very_strict}, {-1.0, SeverityCategory::strict},
      {-0.65, SeverityCategory::strict},     {-0.3, SeverityCategory::moderate},
      {0.0, SeverityCategory::moderate},     {0.3, SeverityCategory::lenient},
      {0.65, SeverityCategory::lenient},     {1.0, SeverityCategory::very_lenient},
      {1.5, SeverityCategory::very_lenient}};
  for (auto [alpha, expected] : grid) {
    o.require(categorize_severity(alpha) == expected, "alpha " + fmt("%.2f", alpha));
    o.require(categorize_severity(std::nextafter(alpha, -10.0)) ==
                  (alpha == -1.0   ? SeverityCategory::very_strict
                   : alpha == -0.3 ? SeverityCategory::strict
                   : alpha == 0.3  ? SeverityCategory::moderate
                   : alpha == 1.0  ? SeverityCategory::lenient
                                   : expected),
              "just below " + fmt("%.2f", alpha));
  }
  if (o.pass) o.detail = "9-point grid and boundary neighbours";
  return o;
}

std::vector<std::string> main_annotators(const SyntheticPopulation& pop) {
  std::vector<std::string> out;
  for (const auto& id : pop.annotator_ids) {
    if (id.rfind("syn", 0) == 0) out.push_back(id);
  }
  return out;
}

Outcome personalisation(const SyntheticPopulation& pop) {
  Outcome o;
  const auto deps = mock_eval_deps(std::make_shared<Lexicon>(pop.lexicon));
  const auto annotators = main_annotators(pop);
  ExperimentConfig cfg;
  cfg.train_fraction = 0.6;
  cfg.condition = Condition::multi_agent;
  const auto multi = run_experiment(cfg, pop.records, annotators, deps);
  cfg.condition = Condition::universal;
  const auto universal = run_experiment(cfg, pop.records, annotators, deps);
  for (const auto& p : multi.profiles) {
    o.require(p.n_train >= 100, "profile " + p.annotator_id + " trained below full confidence");
  }
  const double m = multi.pooled.macro_f1;
  const double u = universal.pooled.macro_f1;
  o.require(annotators.size() == 50, "expected 50 annotators");
  o.require(m >= 0.95, "multi-agent macro F1 " + fmt("%.4f", m));
  o.require(m - u >= 0.15, "gap " + fmt("%.4f", m - u));
  if (o.pass) {
    o.detail = "multi-agent " + fmt("%.4f", m) + " vs universal " + fmt("%.4f", u);
  }
  return o;
}

Outcome learning_curve(const SyntheticPopulation& pop) {
  Outcome o;
  const auto deps = mock_eval_deps(std::make_shared<Lexicon>(pop.lexicon));
  ExperimentConfig cfg;
  const auto rows = run_learning_curve(cfg, pop.records, pop.annotator_ids, deps);
  o.require(rows.size() == 21, "row count");
  for (std::size_t i = 0; i < rows.size() && o.pass; ++i) {
    o.require(rows[i].k == i + 2, "k sequence");
    const std::size_t expected = rows[i].k + 3 <= 10 ? 51 : 50;
    o.require(rows[i].n_profiles == expected,
              "k=" + std::to_string(rows[i].k) + " has " + std::to_string(rows[i].n_profiles));
  }
  if (o.pass) {
    o.require(rows.front().mean_f1 && rows.back().mean_f1, "undefined mean F1");
    if (o.pass) {
      const double first = *rows.front().mean_f1;
      const double last = *rows.back().mean_f1;
      o.require(last >= first, "F1 fell from " + fmt("%.4f", first) + " to " + fmt("%.4f", last));
      if (o.pass) o.detail = "k=2 " + fmt("%.4f", first) + ", k=22 " + fmt("%.4f", last);
    }
  }
  return o;
}

class NoNetwork : public HttpTransport {
 public:
  HttpResponse post_json(const std::string&, const std::vector<std::pair<std::string, std::string>>&,
                         const std::string&, std::chrono::milliseconds) override {
    ++calls;
    throw std::runtime_error("network disabled");
  }
  int calls = 0;
};

Outcome replay_integrity() {
  Outcome o;
  const std::string dir = PRISM_TEST_DATA_DIR;
  const auto doc = nlohmann::json::parse(std::ifstream(dir + "/replay_scenarios.json"));
  std::size_t fixture_lines = 0;
  {
    std::ifstream in(dir + "/replay_fixture.jsonl");
    for (std::string line; std::getline(in, line);) fixture_lines += !line.empty();
  }
  auto run = [&](int& network_calls, std::size_t& ghosts_ok, std::size_t& expert_calls) {
    auto transport = std::make_shared<NoNetwork>();
    GatewayConfig gc;
    gc.mode = GatewayMode::replay;
    gc.fixture_path = dir + "/replay_fixture.jsonl";
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
      ghosts_ok += d.transcript.ghost_invoked == s["expect_ghost"].get<bool>();
      expert_calls += d.transcript.selected_experts.size();
      out.push_back(to_json(d).dump());
    }
    network_calls = transport->calls;
    return out;
  };
  int net1 = 0, net2 = 0;
  std::size_t ghost1 = 0, ghost2 = 0, experts = 0, experts2 = 0;
  const auto a = run(net1, ghost1, experts);
  const auto b = run(net2, ghost2, experts2);
  const std::size_t n = doc["scenarios"].size();
  o.require(experts >= 12, "fewer than 12 recorded expert responses");
  o.require(net1 == 0 && net2 == 0, "network was touched");
  o.require(ghost1 == n && ghost2 == n, "ghost invocation differs from the fixture design");
  o.require(a == b, "decisions differ between runs");
  for (std::size_t i = 0; i < n; ++i) {
    o.require(a[i] == doc["scenarios"][i]["decision"].get<std::string>(),
              "decision differs from the recorded one");
  }
  if (o.pass) {
    o.detail = std::to_string(n) + " cases, " + std::to_string(experts) + " expert responses (" +
               std::to_string(fixture_lines) + " fixture entries), zero network, byte-identical";
  }
  return o;
}

Outcome persistence() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("prism-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto path = (dir / "store.db").string();
  {
    auto store = open_sqlite_store(path);
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        FeedbackEvent e;
        e.content_id = "c" + std::to_string(i);
        e.label = i % 2 ? Label::flag : Label::keep;
        e.severities = SeverityVector(PerDimension<double>{(i % 10) / 10.0});
        store->apply_feedback_transactional("stress", e, PopulationPrior{});
      });
    }
    for (auto& t : threads) t.join();
    const auto p = store->load_profile("stress");
    o.require(p && p->samples == 100, "lost updates");
    o.require(store->feedback_log("stress").size() == 100, "feedback log incomplete");
  }
  {
    auto reopened = open_sqlite_store(path);
    const auto p = reopened->load_profile("stress");
    o.require(p && p->samples == 100, "profile not durable across restart");
    o.require(reopened->repair(PopulationPrior{}).empty(), "restart needed a repair");
  }
  std::filesystem::remove_all(dir);
  if (o.pass) o.detail = "100 concurrent feedbacks -> samples 100; survives reopen";
  return o;
}

}  // namespace

int main() {
  const auto population = make_synthetic_population();
  const std::vector<Criterion> criteria{
      {1, 1, formula_exactness},
      {2, 10, update_oracle},
      {3, 5, weight_oracle},
      {4, 10, metrics_anchor},
      {5, 1, stratified_selection},
      {6, 1, categorisation_grid},
      {7, 120, [&] { return personalisation(population); }},
      {8, 120, [&] { return learning_curve(population); }},
      {9, 30, replay_integrity},
      {10, 60, persistence},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && secs > c.limit_seconds) {
      o.pass = false;
      o.detail = "took longer than " + fmt("%.0fs", c.limit_seconds);
    }
    failures += !o.pass;
    std::printf("criterion %2d %s %7.3fs %s\n", c.id, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
