#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/profile.hpp"

namespace prism::eval {

struct OrdinalColumn {
  std::string column;
  /// Declared maximum; the observed maximum is used when absent.
  std::optional<int> max;
};

/// Binds CSV columns to record fields.
struct ColumnMap {
  std::string comment_id;
  std::string annotator_id;
  std::string text;
  PerDimension<OrdinalColumn> dimensions;
  /// Optional. The annotation is labelled hate when value >= hate_positive_at.
  std::string hate_indicator;
  double hate_positive_at = 1.0;
  std::string hate_score;
  /// Optional precomputed annotator severity.
  std::string annotator_severity;

  /// {"comment_id": "...", "annotator_id": "...", "text": "...",
  ///  "dimensions": {"dehumanise": {"column": "dehumanize", "max": 1}, ...},
  ///  "hate_indicator": "...", "hate_positive_at": 2, "hate_score": "...",
  ///  "annotator_severity": "..."}
  static ColumnMap from_json(const nlohmann::json& object);
  static ColumnMap load(const std::string& path);
};

struct AnnotationRecord {
  std::string comment_id;
  std::string annotator_id;
  std::string text;
  PerDimension<int> ratings{0};
  /// ratings / column maximum
  SeverityVector severities;
  std::optional<bool> hate;
  double hate_score = 0.0;
  std::optional<double> annotator_severity;

  /// The annotator's own judgement: the hate indicator, or mean normalised
  /// severity > 0.5 when the indicator is absent.
  Label label() const;
};

struct IngestReport {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  /// First few rejection reasons, "row N: reason".
  std::vector<std::string> issues;
};

struct Dataset {
  std::vector<AnnotationRecord> records;
  IngestReport report;
};

/// Throws ConfigError when a mapped column is missing from the header.
Dataset ingest_dataset(std::istream& in, const ColumnMap& map);
Dataset ingest_dataset(const std::string& path, const ColumnMap& map);

/// Records per annotator, each list in dataset row order.
std::map<std::string, std::vector<AnnotationRecord>> group_by_annotator(
    std::span<const AnnotationRecord> records);

}  // namespace prism::eval
