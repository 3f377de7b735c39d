#include "prism/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "prism/errors.hpp"
#include "prism/profile_json.hpp"

namespace prism {

std::string_view expert_name(ExpertKind kind) noexcept {
  switch (kind) {
    case ExpertKind::sociologist: return "sociologist";
    case ExpertKind::linguist: return "linguist";
    case ExpertKind::psychologist: return "psychologist";
    case ExpertKind::ghost: return "ghost";
  }
  return "unknown";
}

std::optional<ExpertKind> parse_expert(std::string_view name) noexcept {
  for (ExpertKind k : {ExpertKind::sociologist, ExpertKind::linguist, ExpertKind::psychologist,
                       ExpertKind::ghost}) {
    if (expert_name(k) == name) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Expert responses

namespace {

std::optional<nlohmann::json> find_json_object(std::string_view raw) {
  auto parsed = nlohmann::json::parse(raw, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) return parsed;

  // Models often wrap the object in prose or ```json fences.
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  parsed = nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  return std::nullopt;
}

double clamp_unit(double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); }

}  // namespace

ParsedExpertResponse parse_expert_response(std::string_view raw, ExpertKind expert) {
  const auto object = find_json_object(raw);
  if (!object) throw ParseError("expert response contains no JSON object", std::string(raw));

  const auto decision_it = object->find("decision");
  if (decision_it == object->end() || !decision_it->is_string()) {
    throw ParseError("expert response has no decision", std::string(raw));
  }
  const auto decision = parse_label(decision_it->get<std::string>());
  if (!decision) {
    throw ParseError("unrecognised decision '" + decision_it->get<std::string>() + "'",
                     std::string(raw));
  }

  ParsedExpertResponse out;
  out.analysis.expert = expert;
  out.analysis.decision = *decision;

  PerDimension<double> severities(0.0);
  const auto sev_it = object->find("severities");
  const bool have_object = sev_it != object->end() && sev_it->is_object();
  if (!have_object) out.warnings.push_back("response has no severities object; all set to 0.0");
  for (Dimension d : kAllDimensions) {
    const std::string name(dimension_name(d));
    if (!have_object) continue;
    const auto it = sev_it->find(name);
    if (it == sev_it->end() || !it->is_number()) {
      out.warnings.push_back("severity '" + name + "' missing; filled with 0.0");
      continue;
    }
    severities[d] = it->get<double>();
  }
  out.analysis.severities = SeverityVector::from_raw(severities, out.warnings);

  const auto conf_it = object->find("confidence");
  if (conf_it != object->end() && conf_it->is_number()) {
    const double c = conf_it->get<double>();
    if (!(c >= 0.0 && c <= 1.0)) out.warnings.push_back("confidence clamped to [0, 1]");
    out.analysis.confidence = clamp_unit(c);
  } else {
    out.warnings.push_back("confidence missing; assumed 0.5");
    out.analysis.confidence = 0.5;
  }

  const auto reason_it = object->find("reasoning");
  if (reason_it != object->end() && reason_it->is_string()) {
    out.analysis.reasoning = reason_it->get<std::string>();
  }
  return out;
}

std::string to_response_json(const ExpertAnalysis& analysis) {
  ordered_json out;
  out["decision"] = analysis.decision == Label::flag ? "hate" : "neutral";
  out["severities"] = to_json(analysis.severities);
  out["confidence"] = analysis.confidence;
  out["reasoning"] = analysis.reasoning;
  return out.dump();
}

// ---------------------------------------------------------------------------
// Calibration

CalibrationTable::CalibrationTable(std::vector<ThresholdBand> threshold_bands,
                                   std::vector<WeightBand> weight_bands)
    : threshold_bands_(std::move(threshold_bands)), weight_bands_(std::move(weight_bands)) {
  if (threshold_bands_.empty() || weight_bands_.empty()) {
    throw ValidationError("calibration tables must not be empty");
  }
  double previous = 0.0;
  for (const auto& band : threshold_bands_) {
    if (!(band.upper > previous) || band.upper > 1.0) {
      throw ValidationError("threshold bands must have strictly increasing upper bounds in (0, 1]");
    }
    previous = band.upper;
  }
  if (threshold_bands_.back().upper != 1.0) {
    throw ValidationError("the last threshold band must end at 1.0");
  }
  for (std::size_t i = 0; i < weight_bands_.size(); ++i) {
    const auto& band = weight_bands_[i];
    if (!std::isfinite(band.lower) || band.lower < 0.0) {
      throw ValidationError("weight band lower bounds must be non-negative");
    }
    if (i > 0) {
      const auto& prev = weight_bands_[i - 1];
      const bool ordered = band.lower < prev.lower || (band.lower == prev.lower && !prev.inclusive &&
                                                       band.inclusive);
      if (!ordered) throw ValidationError("weight bands must be ordered by descending lower bound");
    }
  }
  const auto& last = weight_bands_.back();
  if (last.lower != 0.0 || !last.inclusive) {
    throw ValidationError("the last weight band must cover 0 inclusively");
  }
}

const CalibrationTable& CalibrationTable::defaults() {
  static const CalibrationTable table(
      {
          {0.15, "extremely sensitive"},
          {0.35, "highly sensitive"},
          {0.55, "moderately sensitive"},
          {0.75, "tolerant"},
          {1.00, "highly tolerant"},
      },
      {
          {0.8, false, "primary concern"},
          {0.5, false, "significant concern"},
          {0.2, true, "moderate concern"},
          {0.0, true, "negligible"},
      });
  return table;
}

CalibrationTable CalibrationTable::from_json(const nlohmann::json& object) {
  try {
    std::vector<ThresholdBand> thresholds;
    for (const auto& band : object.at("threshold_bands")) {
      thresholds.push_back({band.at("upper").get<double>(), band.at("descriptor").get<std::string>()});
    }
    std::vector<WeightBand> weights;
    for (const auto& band : object.at("weight_bands")) {
      weights.push_back({band.at("lower").get<double>(), band.value("inclusive", true),
                         band.at("descriptor").get<std::string>()});
    }
    return CalibrationTable(std::move(thresholds), std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed calibration table: ") + e.what());
  }
}

CalibrationTable CalibrationTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration file " + path);
  auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ConfigError("calibration file " + path + " is not valid JSON");
  return from_json(parsed);
}

nlohmann::ordered_json CalibrationTable::to_json() const {
  ordered_json out;
  out["threshold_bands"] = ordered_json::array();
  for (const auto& band : threshold_bands_) {
    out["threshold_bands"].push_back({{"upper", band.upper}, {"descriptor", band.descriptor}});
  }
  out["weight_bands"] = ordered_json::array();
  for (const auto& band : weight_bands_) {
    out["weight_bands"].push_back(
        {{"lower", band.lower}, {"inclusive", band.inclusive}, {"descriptor", band.descriptor}});
  }
  return out;
}

const std::string& CalibrationTable::describe_threshold(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ValidationError("threshold must lie in [0, 1], got " + std::to_string(t));
  }
  for (const auto& band : threshold_bands_) {
    if (t < band.upper) return band.descriptor;
  }
  return threshold_bands_.back().descriptor;
}

const std::string& CalibrationTable::describe_weight(double w) const {
  if (!std::isfinite(w) || w < 0.0) {
    throw ValidationError("weight must be a finite non-negative number");
  }
  for (const auto& band : weight_bands_) {
    if (w > band.lower || (band.inclusive && w == band.lower)) return band.descriptor;
  }
  return weight_bands_.back().descriptor;
}

// ---------------------------------------------------------------------------
// Lexicon

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c >= 0x80;
    if (word) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Lexicon::Lexicon(PerDimension<std::vector<Entry>> entries) : entries_(std::move(entries)) {
  for (Dimension d : kAllDimensions) {
    auto& list = entries_[d];
    for (const auto& e : list) {
      if (!(e.contribution > 0.0 && e.contribution <= 1.0)) {
        throw ValidationError("lexicon contribution for '" + e.pattern + "' must lie in (0, 1]");
      }
      if (tokenize(e.pattern).empty()) throw ValidationError("lexicon pattern must contain a token");
    }
    std::sort(list.begin(), list.end(), [](const Entry& a, const Entry& b) {
      return a.pattern != b.pattern ? a.pattern < b.pattern : a.contribution < b.contribution;
    });
    for (const auto& e : list) compiled_[d].push_back({tokenize(e.pattern), e.contribution});
  }
}

Lexicon Lexicon::from_json(const nlohmann::json& object) {
  if (!object.is_object()) throw ConfigError("lexicon must be a JSON object keyed by dimension");
  PerDimension<std::vector<Entry>> entries;
  for (const auto& [key, list] : object.items()) {
    const auto d = parse_dimension(key);
    if (!d) throw ConfigError("lexicon has unknown dimension '" + key + "'");
    if (!list.is_array()) throw ConfigError("lexicon entries for '" + key + "' must be an array");
    for (const auto& item : list) {
      if (!item.is_array() || item.size() != 2 || !item[0].is_string() || !item[1].is_number()) {
        throw ConfigError("lexicon entry for '" + key + "' must be [pattern, contribution]");
      }
      entries[*d].push_back({item[0].get<std::string>(), item[1].get<double>()});
    }
  }
  return Lexicon(std::move(entries));
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file " + path);
  auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ConfigError("lexicon file " + path + " is not valid JSON");
  return from_json(parsed);
}

nlohmann::ordered_json Lexicon::to_json() const {
  ordered_json out = ordered_json::object();
  for (Dimension d : kAllDimensions) {
    auto& list = out[std::string(dimension_name(d))] = ordered_json::array();
    for (const auto& e : entries_[d]) list.push_back(ordered_json::array({e.pattern, e.contribution}));
  }
  return out;
}

SeverityVector Lexicon::score(std::string_view content) const {
  const std::vector<std::string> tokens = tokenize(content);
  PerDimension<double> out(0.0);
  if (tokens.empty()) return SeverityVector(out);

  const auto occurs = [&tokens](const std::vector<std::string>& pattern) {
    if (pattern.size() > tokens.size()) return false;
    for (std::size_t i = 0; i + pattern.size() <= tokens.size(); ++i) {
      if (std::equal(pattern.begin(), pattern.end(), tokens.begin() + static_cast<long>(i))) {
        return true;
      }
    }
    return false;
  };

  for (Dimension d : kAllDimensions) {
    double sum = 0.0;
    for (const auto& entry : compiled_[d]) {
      if (occurs(entry.tokens)) sum += entry.contribution;
    }
    out[d] = std::min(sum, 1.0);
  }
  return SeverityVector(out);
}

}  // namespace prism
