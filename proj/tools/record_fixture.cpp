// Records the replay fixture used by the pipeline tests. A local stand-in
// model server answers with the lexicon mock, so the recording is
// reproducible without credentials.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "prism/mock_responder.hpp"
#include "prism/orchestrator.hpp"
#include "prism/profile_json.hpp"
#include "prism/store.hpp"

namespace {

struct Scenario {
  const char* content_id;
  const char* text;
  bool expect_ghost;
};

const std::vector<Scenario> kScenarios{
    {"r01", "Lovely weather for a walk by the river today", false},
    {"r02", "Only an idiot would park like that", false},
    {"r03", "You idiot, someone could get hurt", true},
    {"r04", "Those vermin are stupid", true},
    {"r05", "Kill them, they are inferior", false},
    {"r06", "Exterminate every idiot and kill the rest", false},
    {"r07", "That moron wants to beat the animals", true},
    {"r08", "What a pathetic clown", false},
    {"r09", "Time to fight back against this dumb plan", false},
    {"r10", "Scum like that deserve an attack", true},
};

constexpr const char* kUser = "replay_user";

std::string serve_chat(const std::string& body, const prism::Lexicon& lexicon) {
  const auto j = nlohmann::json::parse(body);
  std::string system_text, user_text;
  for (const auto& m : j.at("messages")) {
    if (m.at("role") == "system") system_text = m.at("content").get<std::string>();
    if (m.at("role") == "user") user_text = m.at("content").get<std::string>();
  }
  const auto request = prism::make_chat_request(j.at("model").get<std::string>(), system_text,
                                                user_text, j.value("temperature", 0.0));
  nlohmann::json reply{
      {"choices",
       nlohmann::json::array(
           {{{"index", 0},
             {"message", {{"role", "assistant"}, {"content", prism::mock_reply(request, lexicon)}}},
             {"finish_reason", "stop"}}})}};
  return reply.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Record the replay fixture against a local stand-in model"};
  std::string out_dir = "tests/data";
  std::string lexicon_path = std::string(PRISM_DEFAULT_DATA_DIR) + "/lexicon.json";
  app.add_option("--out-dir", out_dir);
  app.add_option("--lexicon", lexicon_path);
  CLI11_PARSE(app, argc, argv);

  const auto lexicon = std::make_shared<prism::Lexicon>(prism::Lexicon::load(lexicon_path));

  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    res.set_content(serve_chat(req.body, *lexicon), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  std::filesystem::create_directories(out_dir);
  const std::string fixture_path = out_dir + "/replay_fixture.jsonl";
  std::filesystem::remove(fixture_path);

  prism::GatewayConfig gc;
  gc.mode = prism::GatewayMode::record;
  gc.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  gc.api_key = "local";
  gc.fixture_path = fixture_path;
  auto gateway = std::make_shared<prism::LlmGateway>(gc, prism::make_http_transport());

  prism::PopulationPrior prior;
  prism::OrchestratorDeps deps;
  deps.store = prism::make_memory_store();
  deps.prior = prior;
  deps.lexicon = lexicon;
  deps.gateway = gateway;
  deps.clock = prism::fixed_clock(prism::Timestamp{});
  deps.parallel_experts = false;
  prism::Orchestrator orchestrator(deps);

  int status = 0;
  nlohmann::ordered_json scenarios = nlohmann::ordered_json::array();
  for (const auto& s : kScenarios) {
    const auto decision = orchestrator.moderate({kUser, s.content_id, s.text});
    if (decision.transcript.ghost_invoked != s.expect_ghost) {
      std::cerr << s.content_id << ": ghost " << decision.transcript.ghost_invoked
                << ", expected " << s.expect_ghost << '\n';
      status = 1;
    }
    nlohmann::ordered_json row;
    row["content_id"] = s.content_id;
    row["text"] = s.text;
    row["expect_ghost"] = s.expect_ghost;
    row["decision"] = prism::to_json(decision).dump();
    scenarios.push_back(std::move(row));
  }
  server.stop();
  thread.join();

  nlohmann::ordered_json doc;
  doc["user_id"] = kUser;
  doc["model"] = gc.model;
  doc["prior"] = prism::to_json(prior);
  doc["scenarios"] = std::move(scenarios);
  std::ofstream(out_dir + "/replay_scenarios.json") << doc.dump(2) << '\n';

  const auto stats = gateway->stats();
  std::cout << "recorded " << stats.network_attempts << " responses to " << fixture_path << '\n';
  return status;
}
