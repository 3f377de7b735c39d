#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "prism/profile.hpp"

namespace prism::eval {

/// Counts with flag (hate) as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& o) noexcept;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  ClassMetrics hate;
  ClassMetrics neutral;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  double cohen_kappa = 0.0;
  std::size_t support = 0;
  Confusion confusion;
};

Confusion confusion_of(std::span<const Label> predictions, std::span<const Label> labels);

/// Two-class report with 0/0 := 0 for every ratio. Kappa is 1 when chance
/// agreement is 1 and agreement is perfect, 0 for any other 0/0.
MetricsReport metrics_from_confusion(const Confusion& c);

/// Throws ValidationError on length mismatch or empty input.
MetricsReport compute_metrics(std::span<const Label> predictions, std::span<const Label> labels);

nlohmann::ordered_json to_json(const MetricsReport& report);

/// Aligned plain-text table.
std::string format_report(const MetricsReport& report);

struct TTestResult {
  double t = 0.0;
  std::size_t df = 0;
  /// Two-sided.
  double p_value = 1.0;
};

/// Paired t-test on a - b. Throws ValidationError for unequal or short
/// inputs and UndefinedStatisticError when the differences have no spread.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// mean(a - b) / sd(a - b), sample standard deviation.
double cohens_d(std::span<const double> a, std::span<const double> b);

}  // namespace prism::eval
