#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/dimension.hpp"
#include "prism/timeutil.hpp"

namespace prism {

/// A user's binary judgement on one item. `flag` means "hide this kind of
/// content from me" (hate/hide in model output), `keep` means it may be shown.
enum class Label : std::uint8_t { flag, keep };

std::string_view label_name(Label label) noexcept;

/// Accepts flag/keep plus the model-facing synonyms hate/hide and neutral/show.
std::optional<Label> parse_label(std::string_view text) noexcept;

/// Per-dimension severity of one content item, always within [0, 1].
class SeverityVector {
 public:
  SeverityVector() = default;

  /// Clamps silently; NaN becomes 0.
  explicit SeverityVector(const PerDimension<double>& values);

  /// Clamps and appends one warning per adjusted value.
  static SeverityVector from_raw(const PerDimension<double>& values,
                                 std::vector<std::string>& warnings);

  static SeverityVector zeros() { return SeverityVector{}; }

  double operator[](Dimension d) const noexcept { return values_[d]; }
  const PerDimension<double>& values() const noexcept { return values_; }

  friend bool operator==(const SeverityVector&, const SeverityVector&) = default;

 private:
  PerDimension<double> values_{};
};

struct FeedbackEvent {
  std::string content_id;
  std::string content_text;
  Label label = Label::keep;
  SeverityVector severities;
  Timestamp timestamp{};

  friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

/// Tunables of the online update. Defaults:
/// rate = 0.1 + 0.2 * (1 - confidence), tolerance 0.1, full confidence at 100.
struct LearningConfig {
  double base_rate = 0.1;
  double rate_span = 0.2;
  double tolerance_delta = 0.1;
  std::uint32_t confidence_horizon = 100;

  void validate() const;
};

/// Population-level defaults a new profile starts from.
struct PopulationPrior {
  PerDimension<double> thresholds{0.5};
  PerDimension<double> weights{0.0};

  void validate() const;
};

struct ProfileRecord {
  std::string user_id;
  PerDimension<double> thresholds{0.5};
  PerDimension<double> weights{0.0};
  PerDimension<double> confidence{0.0};
  std::uint64_t samples = 0;

  /// Throws ValidationError when a range invariant is broken.
  void validate() const;

  double mean_confidence() const noexcept;

  friend bool operator==(const ProfileRecord&, const ProfileRecord&) = default;
};

ProfileRecord init_profile(std::string user_id, const PopulationPrior& prior);

/// min(samples / horizon, 1)
double confidence(std::uint64_t samples, const LearningConfig& config = {});

/// base_rate + rate_span * (1 - kappa). Throws ValidationError outside [0, 1].
double learning_rate(double kappa, const LearningConfig& config = {});

/// One step of the online threshold update. Pure: returns a new profile.
///
/// The sample count is incremented and confidence recomputed before the rate
/// is derived, so the first feedback already uses the post-increment
/// confidence. A `flag` lowers every threshold strictly above the observed
/// severity; a `keep` raises every threshold the observed severity exceeds by
/// more than the tolerance. Each moved threshold becomes
/// (1 - rate) * threshold + rate * severity. Weights are left untouched; see
/// recompute_weights.
ProfileRecord apply_feedback(const ProfileRecord& profile, Label label,
                             const SeverityVector& severities,
                             const LearningConfig& config = {});

ProfileRecord apply_feedback(const ProfileRecord& profile, const FeedbackEvent& feedback,
                             const LearningConfig& config = {});

/// Population standard deviation of each dimension over the history.
/// Fewer than two observations give zero weights.
PerDimension<double> recompute_weights(std::span<const SeverityVector> history);

/// Confidence blend between learned and population thresholds:
/// kappa * learned + (1 - kappa) * prior, per dimension.
PerDimension<double> effective_thresholds(const ProfileRecord& profile,
                                          const PopulationPrior& prior);

}  // namespace prism
