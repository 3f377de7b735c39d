#include "prism/service.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "prism/mock_responder.hpp"

namespace prism {
namespace {

ServiceResponse json_response(int status, const ordered_json& body) {
  return {status, body.dump()};
}

ServiceResponse error_response(int status, const std::string& message,
                               const std::vector<std::string>& details = {}) {
  ordered_json body;
  body["error"] = message;
  if (!details.empty()) body["details"] = details;
  return json_response(status, body);
}

std::string required_field(const nlohmann::json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string() || body[key].get<std::string>().empty()) {
    throw ValidationError(std::string("\"") + key + "\" must be a non-empty string");
  }
  return body[key].get<std::string>();
}

nlohmann::json parse_body(const std::string& body) {
  auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ValidationError("request body must be a JSON object");
  }
  return parsed;
}

/// Maps library errors to status codes; everything else is a 500.
template <typename F>
ServiceResponse guarded(F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    return error_response(400, e.what());
  } catch (const DecisionError& e) {
    return error_response(502, e.what(), e.transcript().warnings);
  } catch (const FixtureMissError& e) {
    return error_response(502, e.what(), {e.tag()});
  } catch (const GatewayError& e) {
    return error_response(502, e.what());
  } catch (const StorageError& e) {
    return error_response(500, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

}  // namespace

ServiceConfig ServiceConfig::from_env(ServiceConfig base) {
  base.gateway = [&] {
    GatewayConfig g = GatewayConfig::from_env();
    // Keep caller-provided values where the environment is silent.
    if (std::getenv("PRISM_MODE") == nullptr) g.mode = base.gateway.mode;
    if (std::getenv("PRISM_FIXTURE_PATH") == nullptr) g.fixture_path = base.gateway.fixture_path;
    if (std::getenv("PRISM_LLM_BASE_URL") == nullptr) g.base_url = base.gateway.base_url;
    return g;
  }();
  base.store_path = env_or("PRISM_STORE_PATH", base.store_path);
  base.corpus_path = env_or("PRISM_CORPUS_PATH", base.corpus_path);
  base.prior_path = env_or("PRISM_PRIOR_PATH", base.prior_path);
  base.lexicon_path = env_or("PRISM_LEXICON_PATH", base.lexicon_path);
  base.calibration_path = env_or("PRISM_CALIBRATION_PATH", base.calibration_path);
  base.fixed_clock = env_or("PRISM_FIXED_CLOCK", base.fixed_clock ? "1" : "0") == "1";
  const std::string bind = env_or("PRISM_BIND", "");
  if (!bind.empty()) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ConfigError("PRISM_BIND must be host:port");
    base.host = bind.substr(0, colon);
    char* end = nullptr;
    const long port = std::strtol(bind.c_str() + colon + 1, &end, 10);
    if (*end != '\0' || port < 0 || port > 65535) throw ConfigError("PRISM_BIND has a bad port");
    base.port = static_cast<int>(port);
  }
  return base;
}

ServiceConfig ServiceConfig::from_env() { return from_env(ServiceConfig()); }

std::vector<CorpusItem> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus " + path);
  const auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) {
    throw ConfigError("corpus " + path + " must be a JSON array");
  }
  std::vector<CorpusItem> items;
  std::set<std::string> seen;
  for (const auto& entry : parsed) {
    if (!entry.is_object() || !entry.contains("content_id") || !entry.contains("text") ||
        !entry["content_id"].is_string() || !entry["text"].is_string()) {
      throw ConfigError("corpus entries need string content_id and text");
    }
    CorpusItem item{entry["content_id"].get<std::string>(), entry["text"].get<std::string>()};
    if (!seen.insert(item.content_id).second) {
      throw ConfigError("duplicate content_id in corpus: " + item.content_id);
    }
    items.push_back(std::move(item));
  }
  return items;
}

ordered_json filter_response(const ModerationDecision& decision, const LearningConfig& learning) {
  ordered_json j;
  j["user_id"] = decision.user_id;
  j["content_id"] = decision.content_id;
  j["verdict"] = verdict_name(decision.verdict);
  j["score"] = decision.score;
  j["severities"] = to_json(decision.severities);
  j["selected_experts"] = ordered_json::array();
  for (ExpertKind e : decision.transcript.selected_experts) {
    j["selected_experts"].push_back(expert_name(e));
  }
  j["ghost_invoked"] = decision.transcript.ghost_invoked;
  j["profile"] = {{"samples", decision.profile_samples_at_decision},
                  {"mean_confidence", confidence(decision.profile_samples_at_decision, learning)}};
  j["warnings"] = decision.transcript.warnings;
  return j;
}

PrismService::PrismService(OrchestratorDeps deps, std::optional<std::vector<CorpusItem>> corpus,
                           LearningConfig learning)
    : orchestrator_(std::move(deps)), corpus_(std::move(corpus)), learning_(learning) {
  learning_.validate();
}

std::shared_ptr<PrismService> PrismService::from_config(const ServiceConfig& config) {
  OrchestratorDeps deps;
  deps.clock = config.fixed_clock ? fixed_clock(Timestamp{}) : Clock(now_utc);
  deps.store = open_store(config.store_path, deps.clock);
  if (!config.prior_path.empty()) deps.prior = load_prior(config.prior_path);
  auto lexicon = std::make_shared<Lexicon>(
      config.lexicon_path.empty() ? Lexicon() : Lexicon::load(config.lexicon_path));
  deps.lexicon = lexicon;
  if (!config.calibration_path.empty()) {
    deps.calibration = CalibrationTable::load(config.calibration_path);
  }
  const bool networked =
      config.gateway.mode == GatewayMode::live || config.gateway.mode == GatewayMode::record;
  deps.gateway = std::make_shared<LlmGateway>(
      config.gateway, networked ? make_http_transport() : nullptr, make_mock_responder(lexicon));
  std::optional<std::vector<CorpusItem>> corpus;
  if (!config.corpus_path.empty()) corpus = load_corpus(config.corpus_path);
  return std::make_shared<PrismService>(std::move(deps), std::move(corpus));
}

ServiceResponse PrismService::handle_filter(const std::string& body) {
  return guarded([&] {
    const auto req = parse_body(body);
    ModerationRequest request;
    request.user_id = required_field(req, "user_id");
    request.content_id = required_field(req, "content_id");
    if (!req.contains("text") || !req["text"].is_string()) {
      throw ValidationError("\"text\" must be a string");
    }
    request.content_text = req["text"].get<std::string>();
    const ModerationDecision decision = orchestrator_.moderate(request);
    return json_response(200, filter_response(decision, learning_));
  });
}

ServiceResponse PrismService::handle_feedback(const std::string& body) {
  return guarded([&] {
    const auto req = parse_body(body);
    const std::string user_id = required_field(req, "user_id");
    FeedbackEvent event;
    event.content_id = required_field(req, "content_id");
    const auto label = parse_label(required_field(req, "label"));
    if (!label) throw ValidationError("\"label\" must be flag or keep");
    event.label = *label;
    event.timestamp = orchestrator_.deps().clock();

    std::vector<std::string> warnings;
    if (req.contains("severities") && !req["severities"].is_null()) {
      event.severities = severities_from_json(req["severities"], &warnings);
    } else {
      const auto record = store().latest_decision(user_id, event.content_id);
      if (!record) {
        return error_response(404, "no severities supplied and no decision recorded for " +
                                       user_id + "/" + event.content_id);
      }
      event.severities = record->severities;
    }
    if (req.contains("text") && req["text"].is_string()) {
      event.content_text = req["text"].get<std::string>();
    } else if (corpus_) {
      for (const auto& item : *corpus_) {
        if (item.content_id == event.content_id) event.content_text = item.text;
      }
    }

    const ProfileRecord before = store().load_or_init(user_id, orchestrator_.deps().prior);
    const ProfileRecord after = store().apply_feedback_transactional(
        user_id, event, orchestrator_.deps().prior, learning_);

    ordered_json out;
    out["user_id"] = user_id;
    out["samples"] = after.samples;
    out["mean_confidence"] = after.mean_confidence();
    out["changed_thresholds"] = ordered_json::array();
    for (Dimension d : kAllDimensions) {
      if (before.thresholds[d] != after.thresholds[d]) {
        out["changed_thresholds"].push_back({{"dimension", dimension_name(d)},
                                             {"old", before.thresholds[d]},
                                             {"new", after.thresholds[d]}});
      }
    }
    out["warnings"] = warnings;
    return json_response(200, out);
  });
}

ServiceResponse PrismService::handle_get_profile(const std::string& user_id, bool init) {
  return guarded([&] {
    if (user_id.empty()) throw ValidationError("user id must not be empty");
    std::optional<ProfileRecord> profile = store().load_profile(user_id);
    if (!profile) {
      if (!init) return error_response(404, "no profile for user " + user_id);
      profile = store().load_or_init(user_id, orchestrator_.deps().prior);
    }
    const auto& calibration = orchestrator_.deps().calibration;
    const PerDimension<double> eff = effective_thresholds(*profile, orchestrator_.deps().prior);
    ordered_json out = to_json(*profile);
    out["effective_thresholds"] = to_json(eff);
    ordered_json descriptors;
    for (Dimension d : kAllDimensions) {
      descriptors[std::string(dimension_name(d))] = {
          {"threshold", calibration.describe_threshold(profile->thresholds[d])},
          {"weight", calibration.describe_weight(profile->weights[d])}};
    }
    out["descriptors"] = std::move(descriptors);
    return json_response(200, out);
  });
}

ServiceResponse PrismService::handle_queue(const std::string& user_id, std::size_t limit,
                                           bool reveal) {
  return guarded([&] {
    if (!corpus_) return error_response(404, "no content source configured");
    if (user_id.empty()) throw ValidationError("user id must not be empty");
    std::set<std::string> reviewed;
    for (const auto& e : store().feedback_log(user_id)) reviewed.insert(e.content_id);

    ordered_json items = ordered_json::array();
    for (const auto& item : *corpus_) {
      if (items.size() >= limit) break;
      if (reviewed.count(item.content_id)) continue;
      const ModerationDecision d = orchestrator_.moderate({user_id, item.content_id, item.text});
      ordered_json entry;
      entry["content_id"] = item.content_id;
      const bool hidden = d.verdict == Verdict::hide;
      entry["text"] = hidden && !reveal ? nlohmann::ordered_json(nullptr) : ordered_json(item.text);
      entry["withheld"] = hidden && !reveal;
      entry["verdict"] = verdict_name(d.verdict);
      entry["score"] = d.score;
      entry["severities"] = to_json(d.severities);
      items.push_back(std::move(entry));
    }
    ordered_json out;
    out["user_id"] = user_id;
    out["items"] = std::move(items);
    return json_response(200, out);
  });
}

}  // namespace prism
