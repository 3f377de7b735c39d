#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/errors.hpp"
#include "prism/gateway.hpp"
#include "prism/profile.hpp"
#include "prism/profile_json.hpp"
#include "prism/scoring.hpp"
#include "prism/store.hpp"

namespace prism {

struct ModerationRequest {
  std::string user_id;
  std::string content_id;
  std::string content_text;

  void validate() const;
};

struct DynamicContext {
  ExpertKind expert = ExpertKind::linguist;
  std::vector<Dimension> focus_dimensions;
  std::string rendered_text;
};

struct AgentTranscript {
  std::string manager_summary;
  std::vector<ExpertKind> selected_experts;
  /// Domain analyses in selection order, then the ghost analysis if any.
  std::vector<ExpertAnalysis> analyses;
  bool ghost_invoked = false;
  std::vector<std::string> warnings;
};

enum class Verdict : std::uint8_t { hide, show };

std::string_view verdict_name(Verdict v) noexcept;

struct ModerationDecision {
  std::string user_id;
  std::string content_id;
  Verdict verdict = Verdict::show;
  double score = 0.0;
  /// Confidence-weighted consensus of the analyses.
  SeverityVector severities;
  PerDimension<double> effective_thresholds{0.0};
  /// severity - effective threshold, per dimension.
  PerDimension<double> effective_threshold_excess{0.0};
  AgentTranscript transcript;
  std::uint64_t profile_samples_at_decision = 0;
  Timestamp decided_at{};
};

/// Canonical decision record. Field and dimension order are fixed.
ordered_json to_json(const ModerationDecision& decision);
ordered_json to_json(const ExpertAnalysis& analysis);

/// Thrown when every selected expert failed; carries what was collected.
class DecisionError : public Error {
 public:
  DecisionError(const std::string& what, AgentTranscript transcript, int gateway_status = 0)
      : Error(what), transcript_(std::move(transcript)), gateway_status_(gateway_status) {}

  const AgentTranscript& transcript() const noexcept { return transcript_; }
  int gateway_status() const noexcept { return gateway_status_; }

 private:
  AgentTranscript transcript_;
  int gateway_status_;
};

inline constexpr double kRelevanceCutoff = 0.2;
inline constexpr double kRelevanceBoost = 0.25;
inline constexpr std::size_t kMaxExperts = 3;

std::span<const Dimension> owned_dimensions(ExpertKind expert);

/// max over owned dimensions of (hint_d + weight_d * kRelevanceBoost)
double expert_relevance(ExpertKind expert, const SeverityVector& hint,
                        const PerDimension<double>& weights);

/// Every expert with relevance >= cutoff, best first, at most three, and at
/// least the single most relevant one. Ties keep canonical expert order.
std::vector<ExpertKind> select_experts(const SeverityVector& hint,
                                       const PerDimension<double>& weights);

inline std::vector<ExpertKind> select_experts(const SeverityVector& hint,
                                              const ProfileRecord& profile) {
  return select_experts(hint, profile.weights);
}

struct ManagerProposal {
  std::vector<ExpertKind> experts;
  std::string summary;
};

/// Accepts {"experts": [...], "summary": ...} naming 1-3 distinct domain
/// experts; nullopt for anything else.
std::optional<ManagerProposal> parse_manager_proposal(std::string_view raw);

/// Focus dimensions sorted by ascending effective threshold (ties keep
/// canonical order), each rendered with its calibrated descriptors, plus the
/// confidence line while mean confidence is below 1.
DynamicContext build_dynamic_context(const ProfileRecord& profile, const PopulationPrior& prior,
                                     ExpertKind expert,
                                     const CalibrationTable& calibration = CalibrationTable::defaults());

/// All ten dimensions in canonical order, as seen by the ghost and the
/// single-agent baseline.
std::string render_full_profile(const ProfileRecord& profile, const PopulationPrior& prior,
                                const CalibrationTable& calibration = CalibrationTable::defaults());

/// True iff there are at least two analyses and they do not all agree.
bool decide_ghost_invocation(std::span<const ExpertAnalysis> analyses);

/// Flags iff some severity strictly exceeds its effective threshold.
ExpertAnalysis ghost_analysis(const ProfileRecord& profile, const PopulationPrior& prior,
                              const SeverityVector& severities);

/// Confidence-weighted mean; uniform when every confidence is zero.
SeverityVector consensus(std::span<const ExpertAnalysis> analyses);

/// Profile weights scaled to sum 1; uniform when they sum to zero.
PerDimension<double> normalized_weights(const PerDimension<double>& weights);

/// score = sum_d w_d * (s_d - t_eff_d); hide iff score > 0. Fills
/// transcript.analyses; the caller completes the rest of the transcript.
ModerationDecision synthesize(std::span<const ExpertAnalysis> analyses,
                              const ProfileRecord& profile, const PopulationPrior& prior);

struct OrchestratorDeps {
  std::shared_ptr<ProfileStore> store;
  PopulationPrior prior;
  std::shared_ptr<const Lexicon> lexicon;
  std::shared_ptr<LlmGateway> gateway;
  CalibrationTable calibration = CalibrationTable::defaults();
  Clock clock = now_utc;
  bool parallel_experts = true;
};

struct SingleAgentResult {
  Label decision = Label::keep;
  SeverityVector severities;
  double confidence = 0.0;
  std::string reasoning;
  std::vector<std::string> warnings;
};

class Orchestrator {
 public:
  explicit Orchestrator(OrchestratorDeps deps);

  /// Load profile -> lexicon pre-scan -> expert selection -> expert calls ->
  /// optional ghost -> synthesis -> decision record. Unknown users are
  /// initialised from the prior.
  ModerationDecision moderate(const ModerationRequest& request);

  /// One model call carrying the whole profile; the baseline pipeline.
  SingleAgentResult classify_single_agent(const ProfileRecord& profile,
                                          std::string_view content_text);

  const OrchestratorDeps& deps() const noexcept { return deps_; }

 private:
  std::vector<ExpertKind> choose_experts(const ProfileRecord& profile,
                                         const SeverityVector& hint, std::string_view content,
                                         AgentTranscript& transcript);
  ExpertAnalysis run_ghost(const ProfileRecord& profile, const SeverityVector& consensus_so_far,
                           std::string_view content, AgentTranscript& transcript);

  OrchestratorDeps deps_;
};

}  // namespace prism
