#include "prism/eval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prism/eval/random.hpp"

namespace prism::eval {
namespace {

constexpr int kQuantum = 64;
constexpr std::array<int, 6> kBits{1, 2, 4, 8, 16, 32};

std::string token(Dimension d, int value) {
  return std::string(dimension_name(d)) + "q" + std::to_string(value);
}

Lexicon synthetic_lexicon() {
  PerDimension<std::vector<Lexicon::Entry>> entries;
  for (Dimension d : kAllDimensions) {
    for (int b : kBits) entries[d].push_back({token(d, b), static_cast<double>(b) / kQuantum});
    entries[d].push_back({token(d, kQuantum), 1.0});
  }
  return Lexicon(std::move(entries));
}

std::string render_item(std::size_t index, const PerDimension<int>& levels) {
  std::string text = "item" + std::to_string(index);
  for (Dimension d : kAllDimensions) {
    const int r = levels[d];
    if (r == kQuantum) {
      text += " " + token(d, kQuantum);
      continue;
    }
    for (int b : kBits) {
      if (r & b) text += " " + token(d, b);
    }
  }
  return text;
}

}  // namespace

double synthetic_hate_score(const SeverityVector& s) {
  double sum = 0.0;
  for (Dimension d : kAllDimensions) sum += s[d];
  return 6.0 * sum / static_cast<double>(kDimensionCount) - 3.0;
}

SyntheticPopulation make_synthetic_population(const SyntheticConfig& config) {
  SyntheticPopulation pop;
  Rng rng(config.seed);
  pop.lexicon = synthetic_lexicon();

  std::vector<PerDimension<int>> levels(config.corpus_size);
  for (std::size_t i = 0; i < config.corpus_size; ++i) {
    // Median of three uniforms is Beta(2, 2): most items sit mid-scale.
    std::array<double, 3> u{rng.uniform(), rng.uniform(), rng.uniform()};
    std::sort(u.begin(), u.end());
    const double z = u[1];
    PerDimension<double> s(0.0);
    for (Dimension d : kAllDimensions) {
      const double v = std::clamp(z + rng.normal(0.0, config.severity_noise), 0.0, 1.0);
      levels[i][d] = static_cast<int>(std::lround(v * kQuantum));
      s[d] = static_cast<double>(levels[i][d]) / kQuantum;
    }
    pop.severities.push_back(SeverityVector(s));
    pop.texts.push_back(render_item(i, levels[i]));
  }

  // Label weights: population standard deviation over the corpus, normalised.
  pop.label_weights = recompute_weights(pop.severities);
  double total = 0.0;
  for (double w : pop.label_weights) total += w;
  for (Dimension d : kAllDimensions) pop.label_weights[d] /= total;

  const auto add_annotator = [&](const std::string& id, std::size_t count) {
    const double base = rng.uniform(config.threshold_min, config.threshold_max);
    PerDimension<double> thresholds(0.0);
    for (Dimension d : kAllDimensions) {
      thresholds[d] = base + rng.normal(0.0, config.threshold_jitter);
    }
    pop.true_thresholds[id] = thresholds;
    pop.annotator_ids.push_back(id);
    const double alpha = (base - 0.5) / 0.2;
    for (std::size_t item : rng.sample(config.corpus_size, count)) {
      double score = 0.0;
      for (Dimension d : kAllDimensions) {
        score += pop.label_weights[d] * (pop.severities[item][d] - thresholds[d]);
      }
      AnnotationRecord r;
      r.comment_id = "c" + std::to_string(item);
      r.annotator_id = id;
      r.text = pop.texts[item];
      r.ratings = levels[item];
      r.severities = pop.severities[item];
      r.hate = score > 0.0;
      r.hate_score = synthetic_hate_score(r.severities);
      r.annotator_severity = alpha;
      pop.records.push_back(std::move(r));
    }
  };

  char id[32];
  for (std::size_t a = 0; a < config.annotators; ++a) {
    std::snprintf(id, sizeof id, "syn%03zu", a);
    add_annotator(id, config.annotations_per_annotator);
  }
  for (std::size_t a = 0; a < config.short_annotators; ++a) {
    std::snprintf(id, sizeof id, "short%03zu", a);
    add_annotator(id, config.short_annotations);
  }
  return pop;
}

}  // namespace prism::eval
