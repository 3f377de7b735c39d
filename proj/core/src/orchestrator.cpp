#include "prism/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>

#include "prism/prompts.hpp"

namespace prism {
namespace {

constexpr std::array<Dimension, 3> kSociologistDims{Dimension::status, Dimension::dehumanise,
                                                    Dimension::genocide};
constexpr std::array<Dimension, 5> kLinguistDims{Dimension::sentiment, Dimension::respect,
                                                 Dimension::insult, Dimension::humiliate,
                                                 Dimension::toxicity};
constexpr std::array<Dimension, 2> kPsychologistDims{Dimension::violence,
                                                     Dimension::attack_defend};

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string describe_prescan(const SeverityVector& hint) {
  std::vector<Dimension> dims(kAllDimensions.begin(), kAllDimensions.end());
  std::stable_sort(dims.begin(), dims.end(),
                   [&](Dimension a, Dimension b) { return hint[a] > hint[b]; });
  std::string out;
  for (std::size_t i = 0; i < 3 && hint[dims[i]] > 0.0; ++i) {
    out += (out.empty() ? "" : ", ") + std::string(dimension_name(dims[i])) + " " +
           fixed2(hint[dims[i]]);
  }
  return out.empty() ? "pre-scan: no lexicon signal" : "pre-scan: strongest signals " + out;
}

}  // namespace

void ModerationRequest::validate() const {
  if (user_id.empty()) throw ValidationError("user_id must not be empty");
  if (content_id.empty()) throw ValidationError("content_id must not be empty");
}

std::string_view verdict_name(Verdict v) noexcept { return v == Verdict::hide ? "hide" : "show"; }

ordered_json to_json(const ExpertAnalysis& analysis) {
  ordered_json j;
  j["expert"] = expert_name(analysis.expert);
  j["decision"] = label_name(analysis.decision);
  j["severities"] = to_json(analysis.severities);
  j["confidence"] = analysis.confidence;
  j["reasoning"] = analysis.reasoning;
  return j;
}

ordered_json to_json(const ModerationDecision& decision) {
  ordered_json transcript;
  transcript["manager_summary"] = decision.transcript.manager_summary;
  transcript["selected_experts"] = ordered_json::array();
  for (ExpertKind e : decision.transcript.selected_experts) {
    transcript["selected_experts"].push_back(expert_name(e));
  }
  transcript["analyses"] = ordered_json::array();
  for (const auto& a : decision.transcript.analyses) transcript["analyses"].push_back(to_json(a));
  transcript["ghost_invoked"] = decision.transcript.ghost_invoked;
  transcript["warnings"] = decision.transcript.warnings;

  ordered_json j;
  j["user_id"] = decision.user_id;
  j["content_id"] = decision.content_id;
  j["verdict"] = verdict_name(decision.verdict);
  j["score"] = decision.score;
  j["severities"] = to_json(decision.severities);
  j["effective_thresholds"] = to_json(decision.effective_thresholds);
  j["effective_threshold_excess"] = to_json(decision.effective_threshold_excess);
  j["transcript"] = std::move(transcript);
  j["profile_samples_at_decision"] = decision.profile_samples_at_decision;
  j["decided_at"] = format_timestamp(decision.decided_at);
  return j;
}

std::span<const Dimension> owned_dimensions(ExpertKind expert) {
  switch (expert) {
    case ExpertKind::sociologist: return kSociologistDims;
    case ExpertKind::linguist: return kLinguistDims;
    case ExpertKind::psychologist: return kPsychologistDims;
    case ExpertKind::ghost: return {};
  }
  return {};
}

double expert_relevance(ExpertKind expert, const SeverityVector& hint,
                        const PerDimension<double>& weights) {
  double best = 0.0;
  for (Dimension d : owned_dimensions(expert)) {
    best = std::max(best, hint[d] + weights[d] * kRelevanceBoost);
  }
  return best;
}

std::vector<ExpertKind> select_experts(const SeverityVector& hint,
                                       const PerDimension<double>& weights) {
  std::vector<std::pair<ExpertKind, double>> ranked;
  for (ExpertKind e : kDomainExperts) ranked.emplace_back(e, expert_relevance(e, hint, weights));
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<ExpertKind> chosen;
  for (const auto& [e, r] : ranked) {
    if (r >= kRelevanceCutoff && chosen.size() < kMaxExperts) chosen.push_back(e);
  }
  if (chosen.empty()) chosen.push_back(ranked.front().first);
  return chosen;
}

std::optional<ManagerProposal> parse_manager_proposal(std::string_view raw) {
  auto parsed = nlohmann::json::parse(raw, nullptr, false);
  if (parsed.is_discarded()) {
    const auto open = raw.find('{');
    const auto close = raw.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
      return std::nullopt;
    }
    parsed = nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
  }
  if (!parsed.is_object() || !parsed.contains("experts") || !parsed["experts"].is_array()) {
    return std::nullopt;
  }
  ManagerProposal proposal;
  for (const auto& name : parsed["experts"]) {
    if (!name.is_string()) return std::nullopt;
    const auto kind = parse_expert(name.get<std::string>());
    if (!kind || *kind == ExpertKind::ghost) return std::nullopt;
    if (std::find(proposal.experts.begin(), proposal.experts.end(), *kind) !=
        proposal.experts.end()) {
      return std::nullopt;
    }
    proposal.experts.push_back(*kind);
  }
  if (proposal.experts.empty() || proposal.experts.size() > kMaxExperts) return std::nullopt;
  if (parsed.contains("summary") && parsed["summary"].is_string()) {
    proposal.summary = parsed["summary"].get<std::string>();
  }
  return proposal;
}

DynamicContext build_dynamic_context(const ProfileRecord& profile, const PopulationPrior& prior,
                                     ExpertKind expert, const CalibrationTable& calibration) {
  if (expert == ExpertKind::ghost) {
    throw ValidationError("the ghost has no dimension focus; use render_full_profile");
  }
  const PerDimension<double> eff = effective_thresholds(profile, prior);
  DynamicContext ctx;
  ctx.expert = expert;
  const auto owned = owned_dimensions(expert);
  ctx.focus_dimensions.assign(owned.begin(), owned.end());
  std::stable_sort(ctx.focus_dimensions.begin(), ctx.focus_dimensions.end(),
                   [&](Dimension a, Dimension b) {
                     return eff[a] != eff[b] ? eff[a] < eff[b] : index_of(a) < index_of(b);
                   });
  std::string text = "Reader profile for your dimensions, most sensitive first:";
  for (Dimension d : ctx.focus_dimensions) {
    text += "\n" + prompts::profile_line(d, eff[d], profile.weights[d], calibration);
  }
  const double kappa = profile.mean_confidence();
  if (kappa < 1.0) text += "\n" + prompts::confidence_line(kappa);
  ctx.rendered_text = std::move(text);
  return ctx;
}

std::string render_full_profile(const ProfileRecord& profile, const PopulationPrior& prior,
                                const CalibrationTable& calibration) {
  const PerDimension<double> eff = effective_thresholds(profile, prior);
  std::string text = "Reader profile:";
  for (Dimension d : kAllDimensions) {
    text += "\n" + prompts::profile_line(d, eff[d], profile.weights[d], calibration);
  }
  const double kappa = profile.mean_confidence();
  if (kappa < 1.0) text += "\n" + prompts::confidence_line(kappa);
  return text;
}

bool decide_ghost_invocation(std::span<const ExpertAnalysis> analyses) {
  if (analyses.size() < 2) return false;
  const Label first = analyses.front().decision;
  return std::any_of(analyses.begin(), analyses.end(),
                     [&](const ExpertAnalysis& a) { return a.decision != first; });
}

ExpertAnalysis ghost_analysis(const ProfileRecord& profile, const PopulationPrior& prior,
                              const SeverityVector& severities) {
  const PerDimension<double> eff = effective_thresholds(profile, prior);
  ExpertAnalysis out;
  out.expert = ExpertKind::ghost;
  out.severities = severities;
  out.confidence = profile.mean_confidence();
  std::string exceeded;
  for (Dimension d : kAllDimensions) {
    if (severities[d] > eff[d]) {
      exceeded += (exceeded.empty() ? "" : ", ") + std::string(dimension_name(d)) + " " +
                  fixed2(severities[d]) + " > " + fixed2(eff[d]);
    }
  }
  out.decision = exceeded.empty() ? Label::keep : Label::flag;
  out.reasoning = exceeded.empty() ? "no dimension exceeds this reader's thresholds"
                                   : "exceeds this reader's thresholds: " + exceeded;
  return out;
}

SeverityVector consensus(std::span<const ExpertAnalysis> analyses) {
  if (analyses.empty()) throw ValidationError("consensus needs at least one analysis");
  double total = 0.0;
  for (const auto& a : analyses) total += a.confidence;
  const bool uniform = total <= 0.0;
  PerDimension<double> out(0.0);
  for (Dimension d : kAllDimensions) {
    double acc = 0.0;
    for (const auto& a : analyses) acc += (uniform ? 1.0 : a.confidence) * a.severities[d];
    out[d] = acc / (uniform ? static_cast<double>(analyses.size()) : total);
  }
  return SeverityVector(out);
}

PerDimension<double> normalized_weights(const PerDimension<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  PerDimension<double> out(1.0 / static_cast<double>(kDimensionCount));
  if (total <= 0.0) return out;
  for (Dimension d : kAllDimensions) out[d] = weights[d] / total;
  return out;
}

ModerationDecision synthesize(std::span<const ExpertAnalysis> analyses,
                              const ProfileRecord& profile, const PopulationPrior& prior) {
  if (analyses.empty()) throw ValidationError("synthesize needs at least one analysis");
  ModerationDecision out;
  out.user_id = profile.user_id;
  out.severities = consensus(analyses);
  out.effective_thresholds = effective_thresholds(profile, prior);
  const PerDimension<double> w = normalized_weights(profile.weights);
  double score = 0.0;
  for (Dimension d : kAllDimensions) {
    out.effective_threshold_excess[d] = out.severities[d] - out.effective_thresholds[d];
    score += w[d] * out.effective_threshold_excess[d];
  }
  out.score = score;
  out.verdict = score > 0.0 ? Verdict::hide : Verdict::show;
  out.transcript.analyses.assign(analyses.begin(), analyses.end());
  out.profile_samples_at_decision = profile.samples;
  return out;
}

// ---------------------------------------------------------------------------

Orchestrator::Orchestrator(OrchestratorDeps deps) : deps_(std::move(deps)) {
  if (!deps_.store) throw ConfigError("orchestrator needs a profile store");
  if (!deps_.gateway) throw ConfigError("orchestrator needs a model gateway");
  if (!deps_.lexicon) deps_.lexicon = std::make_shared<Lexicon>();
  if (!deps_.clock) deps_.clock = now_utc;
  deps_.prior.validate();
}

std::vector<ExpertKind> Orchestrator::choose_experts(const ProfileRecord& profile,
                                                     const SeverityVector& hint,
                                                     std::string_view content,
                                                     AgentTranscript& transcript) {
  const std::vector<ExpertKind> fallback = select_experts(hint, profile);
  transcript.manager_summary = describe_prescan(hint);
  if (deps_.gateway->mode() == GatewayMode::mock) return fallback;

  try {
    const auto prompt = prompts::compose(prompts::manager_prompt(),
                                         render_full_profile(profile, deps_.prior, deps_.calibration),
                                         prompts::manager_task_text(content));
    const std::string raw =
        deps_.gateway->complete(deps_.gateway->make_request(prompt.system_text, prompt.user_text));
    if (auto proposal = parse_manager_proposal(raw)) {
      if (!proposal->summary.empty()) transcript.manager_summary = proposal->summary;
      return proposal->experts;
    }
    transcript.warnings.push_back("manager proposal rejected; using pre-scan selection");
  } catch (const GatewayError& e) {
    transcript.warnings.push_back(std::string("manager unavailable: ") + e.what());
  }
  return fallback;
}

ExpertAnalysis Orchestrator::run_ghost(const ProfileRecord& profile,
                                       const SeverityVector& consensus_so_far,
                                       std::string_view content, AgentTranscript& transcript) {
  const ExpertAnalysis rule = ghost_analysis(profile, deps_.prior, consensus_so_far);
  if (deps_.gateway->mode() == GatewayMode::mock) return rule;

  std::string context = render_full_profile(profile, deps_.prior, deps_.calibration);
  context += "\nSpecialist consensus severities:";
  for (Dimension d : kAllDimensions) {
    context += "\n  " + std::string(dimension_name(d)) + " " + fixed2(consensus_so_far[d]);
  }
  const auto prompt = prompts::compose(prompts::base_prompt(ExpertKind::ghost), context,
                                       prompts::task_text(content));
  try {
    const std::string raw =
        deps_.gateway->complete(deps_.gateway->make_request(prompt.system_text, prompt.user_text));
    auto parsed = parse_expert_response(raw, ExpertKind::ghost);
    for (auto& w : parsed.warnings) transcript.warnings.push_back("ghost: " + w);
    return parsed.analysis;
  } catch (const Error& e) {
    transcript.warnings.push_back(std::string("ghost fell back to threshold rule: ") + e.what());
    return rule;
  }
}

ModerationDecision Orchestrator::moderate(const ModerationRequest& request) {
  request.validate();
  const ProfileRecord profile = deps_.store->load_or_init(request.user_id, deps_.prior);
  const SeverityVector hint = deps_.lexicon->score(request.content_text);

  AgentTranscript transcript;
  transcript.selected_experts = choose_experts(profile, hint, request.content_text, transcript);

  struct Outcome {
    std::optional<ParsedExpertResponse> parsed;
    std::string error;
    int status = 0;
  };
  const auto call_expert = [&](ExpertKind expert) {
    Outcome out;
    const DynamicContext ctx = build_dynamic_context(profile, deps_.prior, expert, deps_.calibration);
    const auto prompt = prompts::compose(prompts::base_prompt(expert), ctx.rendered_text,
                                         prompts::task_text(request.content_text));
    const ChatRequest chat = deps_.gateway->make_request(prompt.system_text, prompt.user_text);
    const int attempts = deps_.gateway->mode() == GatewayMode::live ? 2 : 1;
    for (int i = 0; i < attempts; ++i) {
      try {
        out.parsed = parse_expert_response(deps_.gateway->complete(chat), expert);
        out.error.clear();
        return out;
      } catch (const ParseError& e) {
        out.error = e.what();
      } catch (const FixtureMissError& e) {
        out.error = e.what();
        out.status = 502;
        return out;
      } catch (const GatewayError& e) {
        out.error = e.what();
        out.status = e.status() != 0 ? e.status() : 502;
        return out;
      }
    }
    return out;
  };

  std::vector<Outcome> outcomes;
  if (deps_.parallel_experts && transcript.selected_experts.size() > 1) {
    std::vector<std::future<Outcome>> futures;
    for (ExpertKind e : transcript.selected_experts) {
      futures.push_back(std::async(std::launch::async, call_expert, e));
    }
    for (auto& f : futures) outcomes.push_back(f.get());
  } else {
    for (ExpertKind e : transcript.selected_experts) outcomes.push_back(call_expert(e));
  }

  int gateway_status = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const std::string name(expert_name(transcript.selected_experts[i]));
    if (outcomes[i].parsed) {
      for (auto& w : outcomes[i].parsed->warnings) transcript.warnings.push_back(name + ": " + w);
      transcript.analyses.push_back(outcomes[i].parsed->analysis);
    } else {
      transcript.warnings.push_back(name + " failed: " + outcomes[i].error);
      if (outcomes[i].status != 0) gateway_status = outcomes[i].status;
    }
  }
  if (transcript.analyses.empty()) {
    throw DecisionError("no expert produced an analysis for content " + request.content_id,
                        std::move(transcript), gateway_status);
  }

  if (decide_ghost_invocation(transcript.analyses)) {
    transcript.ghost_invoked = true;
    const SeverityVector so_far = consensus(transcript.analyses);
    transcript.analyses.push_back(run_ghost(profile, so_far, request.content_text, transcript));
  }

  ModerationDecision decision = synthesize(transcript.analyses, profile, deps_.prior);
  decision.content_id = request.content_id;
  decision.transcript = std::move(transcript);
  decision.decided_at = deps_.clock();

  DecisionRecord record;
  record.user_id = decision.user_id;
  record.content_id = decision.content_id;
  record.decided_at = decision.decided_at;
  record.severities = decision.severities;
  record.payload = to_json(decision).dump();
  deps_.store->append_decision(record);
  return decision;
}

SingleAgentResult Orchestrator::classify_single_agent(const ProfileRecord& profile,
                                                      std::string_view content_text) {
  const auto prompt =
      prompts::compose(prompts::single_agent_prompt(),
                       render_full_profile(profile, deps_.prior, deps_.calibration),
                       prompts::task_text(content_text));
  const std::string raw =
      deps_.gateway->complete(deps_.gateway->make_request(prompt.system_text, prompt.user_text));
  auto parsed = parse_expert_response(raw, ExpertKind::ghost);
  SingleAgentResult out;
  out.decision = parsed.analysis.decision;
  out.severities = parsed.analysis.severities;
  out.confidence = parsed.analysis.confidence;
  out.reasoning = std::move(parsed.analysis.reasoning);
  out.warnings = std::move(parsed.warnings);
  return out;
}

}  // namespace prism
