#include "prism/profile_json.hpp"

#include <fstream>

#include "prism/errors.hpp"

namespace prism {

ordered_json to_json(const PerDimension<double>& values) {
  ordered_json out = ordered_json::object();
  for (Dimension d : kAllDimensions) out[std::string(dimension_name(d))] = values[d];
  return out;
}

PerDimension<double> per_dimension_from_json(const nlohmann::json& object, std::string_view what) {
  if (!object.is_object()) {
    throw ValidationError(std::string(what) + " must be an object keyed by dimension");
  }
  for (const auto& [key, value] : object.items()) {
    if (!parse_dimension(key)) {
      throw ValidationError(std::string(what) + " has unknown dimension '" + key + "'");
    }
  }
  PerDimension<double> out;
  for (Dimension d : kAllDimensions) {
    const std::string name(dimension_name(d));
    const auto it = object.find(name);
    if (it == object.end()) {
      throw ValidationError(std::string(what) + " is missing dimension '" + name + "'");
    }
    if (!it->is_number()) {
      throw ValidationError(std::string(what) + "." + name + " must be a number");
    }
    out[d] = it->get<double>();
  }
  return out;
}

ordered_json to_json(const ProfileRecord& profile) {
  ordered_json out;
  out["user_id"] = profile.user_id;
  out["thresholds"] = to_json(profile.thresholds);
  out["weights"] = to_json(profile.weights);
  out["confidence"] = to_json(profile.confidence);
  out["samples"] = profile.samples;
  return out;
}

ProfileRecord profile_from_json(const nlohmann::json& object) {
  if (!object.is_object()) throw ValidationError("profile must be a JSON object");
  ProfileRecord profile;
  try {
    profile.user_id = object.at("user_id").get<std::string>();
    profile.thresholds = per_dimension_from_json(object.at("thresholds"), "thresholds");
    profile.weights = per_dimension_from_json(object.at("weights"), "weights");
    profile.confidence = per_dimension_from_json(object.at("confidence"), "confidence");
    const auto& samples = object.at("samples");
    if (!samples.is_number_unsigned()) throw ValidationError("samples must be a non-negative integer");
    profile.samples = samples.get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed profile: ") + e.what());
  }
  profile.validate();
  return profile;
}

ordered_json to_json(const SeverityVector& severities) { return to_json(severities.values()); }

SeverityVector severities_from_json(const nlohmann::json& object,
                                    std::vector<std::string>* warnings) {
  const PerDimension<double> raw = per_dimension_from_json(object, "severities");
  if (warnings) return SeverityVector::from_raw(raw, *warnings);
  return SeverityVector(raw);
}

ordered_json to_json(const FeedbackEvent& event) {
  ordered_json out;
  out["content_id"] = event.content_id;
  out["content_text"] = event.content_text;
  out["label"] = label_name(event.label);
  out["severities"] = to_json(event.severities);
  out["timestamp"] = format_timestamp(event.timestamp);
  return out;
}

FeedbackEvent feedback_from_json(const nlohmann::json& object) {
  FeedbackEvent event;
  try {
    event.content_id = object.at("content_id").get<std::string>();
    event.content_text = object.value("content_text", std::string{});
    const auto label = parse_label(object.at("label").get<std::string>());
    if (!label) throw ValidationError("feedback label must be flag or keep");
    event.label = *label;
    event.severities = severities_from_json(object.at("severities"));
    event.timestamp = parse_timestamp(object.at("timestamp").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed feedback event: ") + e.what());
  }
  return event;
}

ordered_json to_json(const PopulationPrior& prior) {
  ordered_json out;
  out["thresholds"] = to_json(prior.thresholds);
  out["weights"] = to_json(prior.weights);
  return out;
}

PopulationPrior prior_from_json(const nlohmann::json& object) {
  if (!object.is_object() || !object.contains("thresholds") || !object.contains("weights")) {
    throw ValidationError("prior must contain thresholds and weights");
  }
  PopulationPrior prior;
  prior.thresholds = per_dimension_from_json(object.at("thresholds"), "prior.thresholds");
  prior.weights = per_dimension_from_json(object.at("weights"), "prior.weights");
  prior.validate();
  return prior;
}

PopulationPrior load_prior(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open prior file " + path);
  try {
    return prior_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("prior file " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace prism
