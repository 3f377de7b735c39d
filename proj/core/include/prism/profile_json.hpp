#pragma once

#include <nlohmann/json.hpp>

#include "prism/profile.hpp"

namespace prism {

using ordered_json = nlohmann::ordered_json;

/// {"sentiment": ..., ..., "toxicity": ...} in canonical dimension order.
ordered_json to_json(const PerDimension<double>& values);

/// Throws ValidationError when a dimension is missing, unknown, or not numeric.
PerDimension<double> per_dimension_from_json(const nlohmann::json& object, std::string_view what);

/// Canonical profile object:
/// {user_id, thresholds, weights, confidence, samples}.
ordered_json to_json(const ProfileRecord& profile);
ProfileRecord profile_from_json(const nlohmann::json& object);

ordered_json to_json(const SeverityVector& severities);
SeverityVector severities_from_json(const nlohmann::json& object,
                                    std::vector<std::string>* warnings = nullptr);

ordered_json to_json(const FeedbackEvent& event);
FeedbackEvent feedback_from_json(const nlohmann::json& object);

ordered_json to_json(const PopulationPrior& prior);
PopulationPrior prior_from_json(const nlohmann::json& object);
PopulationPrior load_prior(const std::string& path);

}  // namespace prism
