#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/profile.hpp"

namespace prism {

enum class ExpertKind : std::uint8_t { sociologist, linguist, psychologist, ghost };

/// The three domain experts in canonical order (ghost excluded).
inline constexpr std::array<ExpertKind, 3> kDomainExperts{
    ExpertKind::sociologist, ExpertKind::linguist, ExpertKind::psychologist};

std::string_view expert_name(ExpertKind kind) noexcept;
std::optional<ExpertKind> parse_expert(std::string_view name) noexcept;

struct ExpertAnalysis {
  ExpertKind expert = ExpertKind::linguist;
  Label decision = Label::keep;
  SeverityVector severities;
  double confidence = 0.0;
  std::string reasoning;

  friend bool operator==(const ExpertAnalysis&, const ExpertAnalysis&) = default;
};

struct ParsedExpertResponse {
  ExpertAnalysis analysis;
  std::vector<std::string> warnings;
};

/// Parses the structured reply of an expert (or ghost) model call.
///
/// Accepts the bare JSON object or one embedded in surrounding prose / code
/// fences. Severities and confidence are clamped to [0, 1]; a missing
/// dimension becomes 0.0 and a missing confidence 0.5, each with a warning.
/// Throws ParseError (carrying `raw`) when no object or no decision is found.
ParsedExpertResponse parse_expert_response(std::string_view raw, ExpertKind expert);

/// Serializes to the expert response schema:
/// {"decision": "hate"|"neutral", "severities": {...}, "confidence", "reasoning"}.
std::string to_response_json(const ExpertAnalysis& analysis);

/// Half-open threshold band [previous upper, upper); the final band is closed.
struct ThresholdBand {
  double upper = 1.0;
  std::string descriptor;
};

/// Weight band selected when w > lower (or w >= lower when inclusive).
/// Bands are ordered from the highest lower bound down.
struct WeightBand {
  double lower = 0.0;
  bool inclusive = true;
  std::string descriptor;
};

/// Maps numeric profile parameters to the natural-language anchors that are
/// embedded in expert prompts.
class CalibrationTable {
 public:
  CalibrationTable(std::vector<ThresholdBand> threshold_bands, std::vector<WeightBand> weight_bands);

  static const CalibrationTable& defaults();

  /// {"threshold_bands": [{"upper", "descriptor"}...],
  ///  "weight_bands": [{"lower", "inclusive", "descriptor"}...]}
  static CalibrationTable from_json(const nlohmann::json& object);
  static CalibrationTable load(const std::string& path);
  nlohmann::ordered_json to_json() const;

  /// Throws ValidationError outside [0, 1].
  const std::string& describe_threshold(double t) const;
  /// Throws ValidationError for negative or non-finite input.
  const std::string& describe_weight(double w) const;

  const std::vector<ThresholdBand>& threshold_bands() const noexcept { return threshold_bands_; }
  const std::vector<WeightBand>& weight_bands() const noexcept { return weight_bands_; }

 private:
  std::vector<ThresholdBand> threshold_bands_;
  std::vector<WeightBand> weight_bands_;
};

inline const std::string& describe_threshold(double t) {
  return CalibrationTable::defaults().describe_threshold(t);
}
inline const std::string& describe_weight(double w) {
  return CalibrationTable::defaults().describe_weight(w);
}

/// Splits text into lowercase whole tokens: runs of ASCII letters/digits and
/// non-ASCII bytes. Everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Deterministic pattern lexicon used for the severity pre-scan and for the
/// offline mock experts.
class Lexicon {
 public:
  struct Entry {
    std::string pattern;
    double contribution = 0.0;
  };

  Lexicon() = default;

  /// Entries are canonicalised (sorted) so scoring does not depend on the
  /// order they were supplied in. Throws ValidationError for contributions
  /// outside (0, 1] or empty patterns.
  explicit Lexicon(PerDimension<std::vector<Entry>> entries);

  /// {"violence": [["kill", 0.7], ...], ...}; dimensions may be omitted.
  static Lexicon from_json(const nlohmann::json& object);
  static Lexicon load(const std::string& path);
  nlohmann::ordered_json to_json() const;

  const std::vector<Entry>& entries(Dimension d) const noexcept { return entries_[d]; }

  /// Per dimension: min(1, sum of contributions of the patterns that occur
  /// in the content as a contiguous whole-token sequence). Each pattern
  /// counts once however often it occurs.
  SeverityVector score(std::string_view content) const;

 private:
  struct Compiled {
    std::vector<std::string> tokens;
    double contribution;
  };

  PerDimension<std::vector<Entry>> entries_;
  PerDimension<std::vector<Compiled>> compiled_;
};

inline SeverityVector lexicon_score(std::string_view content, const Lexicon& lexicon) {
  return lexicon.score(content);
}

}  // namespace prism
