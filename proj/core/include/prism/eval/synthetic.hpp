#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prism/eval/dataset.hpp"
#include "prism/scoring.hpp"

namespace prism::eval {

struct SyntheticConfig {
  std::size_t corpus_size = 500;
  std::size_t annotators = 50;
  std::size_t annotations_per_annotator = 200;
  /// Extra annotators with a short sequence, appended after the main ones.
  std::size_t short_annotators = 1;
  std::size_t short_annotations = 10;
  double severity_noise = 0.1;
  double threshold_min = 0.1;
  double threshold_max = 0.9;
  double threshold_jitter = 0.02;
  std::uint64_t seed = 2024;
};

/// A population whose ground truth is known exactly. Item severities are
/// multiples of 1/64 and every item's text is built from lexicon tokens
/// whose contributions add up to those severities, so a lexicon scorer
/// recovers them without error. Each annotator labels an item flag iff
/// sum_d w_d (s_d - T_d) > 0, with w the normalised corpus standard
/// deviations and T the annotator's true thresholds.
struct SyntheticPopulation {
  std::vector<std::string> texts;
  std::vector<SeverityVector> severities;
  Lexicon lexicon;
  PerDimension<double> label_weights{0.0};
  std::map<std::string, PerDimension<double>> true_thresholds;
  /// Rows ordered annotator by annotator, each in labelling order.
  std::vector<AnnotationRecord> records;
  std::vector<std::string> annotator_ids;
};

SyntheticPopulation make_synthetic_population(const SyntheticConfig& config = {});

/// hate_score = 6 * mean severity - 3, the scale the universal rule expects.
double synthetic_hate_score(const SeverityVector& s);

}  // namespace prism::eval
