#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/eval/dataset.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/gateway.hpp"
#include "prism/profile.hpp"
#include "prism/scoring.hpp"

namespace prism::eval {

enum class Condition : std::uint8_t { universal, single_agent, multi_agent };

std::string_view condition_name(Condition c) noexcept;
std::optional<Condition> parse_condition(std::string_view name) noexcept;

struct ExperimentConfig {
  Condition condition = Condition::multi_agent;
  std::size_t n_profiles = 100;
  std::size_t min_annotations = 10;
  std::size_t max_annotations = 25;
  std::uint64_t seed = 7;
  std::size_t k_min = 2;
  std::size_t k_max = 22;
  /// Minimum held-out annotations per profile.
  std::size_t holdout = 3;
  /// Share of each annotator's sequence used for training in run_experiment.
  double train_fraction = 0.5;
  LearningConfig learning;

  void validate() const;
};

/// Per-dimension median of the normalised ratings; weights are the
/// per-dimension population standard deviation. Throws on empty input.
PopulationPrior population_prior(std::span<const AnnotationRecord> records);

FeedbackEvent to_feedback(const AnnotationRecord& record);

/// Prior profile folded with the first k annotations (all when k is absent);
/// weights recomputed over the folded severities.
ProfileRecord build_profile_from_annotations(const std::string& user_id,
                                             std::span<const AnnotationRecord> records,
                                             std::optional<std::size_t> k,
                                             const PopulationPrior& prior,
                                             const LearningConfig& config = {});

/// flag iff hate_score > 0.5
Label universal_baseline(const AnnotationRecord& record);

/// Everything the model-backed conditions need. Mock and replay gateways
/// keep runs reproducible.
struct EvalDeps {
  std::shared_ptr<const Lexicon> lexicon;
  std::shared_ptr<LlmGateway> gateway;
  CalibrationTable calibration = CalibrationTable::defaults();
};

/// Mock-mode deps around a lexicon.
EvalDeps mock_eval_deps(std::shared_ptr<const Lexicon> lexicon);

struct ProfileResult {
  std::string annotator_id;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::optional<MetricsReport> metrics;
  std::string error;
};

struct ExperimentResult {
  Condition condition = Condition::universal;
  /// Pooled over every evaluated annotation.
  MetricsReport pooled;
  std::vector<ProfileResult> profiles;
  PopulationPrior prior;
};

/// Training size for a sequence of n annotations: round(fraction * n),
/// capped so at least `holdout` remain.
std::size_t train_size(std::size_t n, double fraction, std::size_t holdout);

/// Classifies `test` for one annotator under a condition, given the trained
/// profile. Predictions are in `test` order.
std::vector<Label> classify(Condition condition, const ProfileRecord& profile,
                            std::span<const AnnotationRecord> test, const PopulationPrior& prior,
                            const EvalDeps& deps);

/// Builds every listed annotator's profile from the head of their sequence,
/// classifies the rest and scores against the annotator's own labels. The
/// prior comes from all records. Failed profiles are reported and skipped.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::span<const AnnotationRecord> records,
                                const std::vector<std::string>& annotators, const EvalDeps& deps);

struct CurveRow {
  std::size_t k = 0;
  std::optional<double> mean_f1;
  std::size_t n_profiles = 0;
};

/// For k in [k_min, k_max]: annotators with at least k + holdout annotations
/// train on their first k and are scored on the rest; the row holds the mean
/// per-profile macro F1.
std::vector<CurveRow> run_learning_curve(const ExperimentConfig& config,
                                         std::span<const AnnotationRecord> records,
                                         const std::vector<std::string>& annotators,
                                         const EvalDeps& deps);

/// "k,mean_f1,n_profiles" with an empty mean_f1 cell when undefined.
std::string format_curve_csv(std::span<const CurveRow> rows);

}  // namespace prism::eval
