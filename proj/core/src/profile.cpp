#include "prism/profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prism/errors.hpp"

namespace prism {
namespace {

bool is_fraction(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void require_fractions(const PerDimension<double>& values, const char* what) {
  for (Dimension d : kAllDimensions) {
    if (!is_fraction(values[d])) {
      throw ValidationError(std::string(what) + "." + std::string(dimension_name(d)) +
                            " must lie in [0, 1], got " + std::to_string(values[d]));
    }
  }
}

void require_non_negative(const PerDimension<double>& values, const char* what) {
  for (Dimension d : kAllDimensions) {
    if (!std::isfinite(values[d]) || values[d] < 0.0) {
      throw ValidationError(std::string(what) + "." + std::string(dimension_name(d)) +
                            " must be a finite non-negative number");
    }
  }
}

double clamp_unit(double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); }

}  // namespace

std::string_view label_name(Label label) noexcept {
  return label == Label::flag ? "flag" : "keep";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "flag" || text == "hate" || text == "hide") return Label::flag;
  if (text == "keep" || text == "neutral" || text == "show") return Label::keep;
  return std::nullopt;
}

SeverityVector::SeverityVector(const PerDimension<double>& values) {
  for (Dimension d : kAllDimensions) values_[d] = clamp_unit(values[d]);
}

SeverityVector SeverityVector::from_raw(const PerDimension<double>& values,
                                        std::vector<std::string>& warnings) {
  for (Dimension d : kAllDimensions) {
    const double v = values[d];
    if (!is_fraction(v)) {
      warnings.push_back("severity " + std::string(dimension_name(d)) + "=" + std::to_string(v) +
                         " clamped to [0, 1]");
    }
  }
  return SeverityVector(values);
}

void LearningConfig::validate() const {
  if (!is_fraction(base_rate) || !is_fraction(rate_span) || base_rate + rate_span > 1.0) {
    throw ValidationError("learning rates must satisfy base_rate + rate_span <= 1");
  }
  if (!is_fraction(tolerance_delta)) throw ValidationError("tolerance_delta must lie in [0, 1]");
  if (confidence_horizon == 0) throw ValidationError("confidence_horizon must be positive");
}

void PopulationPrior::validate() const {
  require_fractions(thresholds, "prior.thresholds");
  require_non_negative(weights, "prior.weights");
}

void ProfileRecord::validate() const {
  if (user_id.empty()) throw ValidationError("profile user_id must not be empty");
  require_fractions(thresholds, "thresholds");
  require_non_negative(weights, "weights");
  require_fractions(confidence, "confidence");
}

double ProfileRecord::mean_confidence() const noexcept {
  double sum = 0.0;
  for (double c : confidence) sum += c;
  return sum / static_cast<double>(kDimensionCount);
}

ProfileRecord init_profile(std::string user_id, const PopulationPrior& prior) {
  prior.validate();
  ProfileRecord profile;
  profile.user_id = std::move(user_id);
  profile.thresholds = prior.thresholds;
  profile.weights = prior.weights;
  profile.confidence = PerDimension<double>(0.0);
  profile.samples = 0;
  return profile;
}

double confidence(std::uint64_t samples, const LearningConfig& config) {
  const double ratio =
      static_cast<double>(samples) / static_cast<double>(config.confidence_horizon);
  return std::min(ratio, 1.0);
}

double learning_rate(double kappa, const LearningConfig& config) {
  if (!is_fraction(kappa)) {
    throw ValidationError("confidence must lie in [0, 1], got " + std::to_string(kappa));
  }
  return config.base_rate + config.rate_span * (1.0 - kappa);
}

ProfileRecord apply_feedback(const ProfileRecord& profile, Label label,
                             const SeverityVector& severities, const LearningConfig& config) {
  ProfileRecord next = profile;
  next.samples = profile.samples + 1;
  const double kappa = confidence(next.samples, config);
  next.confidence = PerDimension<double>(kappa);
  const double rate = learning_rate(kappa, config);

  for (Dimension d : kAllDimensions) {
    const double observed = severities[d];
    const double current = profile.thresholds[d];
    const bool move = label == Label::flag ? observed < current
                                           : observed > current + config.tolerance_delta;
    if (move) next.thresholds[d] = clamp_unit((1.0 - rate) * current + rate * observed);
  }
  return next;
}

ProfileRecord apply_feedback(const ProfileRecord& profile, const FeedbackEvent& feedback,
                             const LearningConfig& config) {
  return apply_feedback(profile, feedback.label, feedback.severities, config);
}

PerDimension<double> recompute_weights(std::span<const SeverityVector> history) {
  PerDimension<double> weights(0.0);
  if (history.size() < 2) return weights;

  // Welford accumulation, one pass per dimension.
  for (Dimension d : kAllDimensions) {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (const SeverityVector& s : history) {
      ++n;
      const double delta = s[d] - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (s[d] - mean);
    }
    weights[d] = std::sqrt(std::max(m2, 0.0) / static_cast<double>(n));
  }
  return weights;
}

PerDimension<double> effective_thresholds(const ProfileRecord& profile,
                                          const PopulationPrior& prior) {
  PerDimension<double> out;
  for (Dimension d : kAllDimensions) {
    const double kappa = profile.confidence[d];
    out[d] = kappa * profile.thresholds[d] + (1.0 - kappa) * prior.thresholds[d];
  }
  return out;
}

}  // namespace prism
