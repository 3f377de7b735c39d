#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/eval/dataset.hpp"

namespace prism::eval {

enum class SeverityCategory : std::uint8_t { very_strict, strict, moderate, lenient, very_lenient };

inline constexpr std::array<SeverityCategory, 5> kAllCategories{
    SeverityCategory::very_strict, SeverityCategory::strict, SeverityCategory::moderate,
    SeverityCategory::lenient, SeverityCategory::very_lenient};

std::string_view category_name(SeverityCategory c) noexcept;
std::optional<SeverityCategory> parse_category(std::string_view name) noexcept;

/// < -1.0 very strict, [-1.0, -0.3) strict, [-0.3, 0.3) moderate,
/// [0.3, 1.0) lenient, >= 1.0 very lenient. Throws ValidationError on NaN/inf.
SeverityCategory categorize_severity(double alpha);

struct SeverityEstimate {
  std::map<std::string, double> alpha;
  std::vector<std::string> warnings;
  /// True when the dataset's precomputed values were used verbatim.
  bool passthrough = false;
};

/// Stand-in for a fitted rater-severity parameter. Per annotator: the mean,
/// over their comments that have other raters, of (mean rating of the other
/// raters - own rating), standardised across annotators. A rating is the
/// mean normalised severity of the annotation. Rating above peers gives a
/// negative value (strict). When every record carries a precomputed
/// severity those values are returned instead.
SeverityEstimate annotator_severity_proxy(std::span<const AnnotationRecord> records);

struct PoolEntry {
  std::string annotator_id;
  std::size_t count = 0;
  SeverityCategory category = SeverityCategory::moderate;
};

struct Selection {
  std::vector<std::string> annotators;
  std::map<SeverityCategory, std::size_t> per_category;
  std::size_t top_ups = 0;
  std::vector<std::string> warnings;
};

/// Stratified draw: up to n/5 per category (category order, then draw
/// order), topped up from the remaining eligible annotators when a category
/// runs short. Entries with count outside [min_count, max_count] are ignored.
/// Deterministic for a fixed seed and independent of input order.
Selection select_profiles(std::vector<PoolEntry> pool, std::size_t n, std::uint64_t seed,
                          std::size_t min_count = 10, std::size_t max_count = 25);

/// Proxy (or passthrough) severities -> categories -> select_profiles.
Selection select_from_dataset(std::span<const AnnotationRecord> records, std::size_t n,
                              std::uint64_t seed, std::size_t min_count = 10,
                              std::size_t max_count = 25);

}  // namespace prism::eval
