#include "prism/eval/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prism/errors.hpp"
#include "prism/mock_responder.hpp"
#include "prism/orchestrator.hpp"
#include "prism/store.hpp"

namespace prism::eval {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::string_view condition_name(Condition c) noexcept {
  switch (c) {
    case Condition::universal: return "universal";
    case Condition::single_agent: return "single_agent";
    case Condition::multi_agent: return "multi_agent";
  }
  return "unknown";
}

std::optional<Condition> parse_condition(std::string_view name) noexcept {
  for (Condition c : {Condition::universal, Condition::single_agent, Condition::multi_agent}) {
    if (condition_name(c) == name) return c;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (min_annotations > max_annotations) throw ValidationError("annotation range is empty");
  if (k_min > k_max) throw ValidationError("k range is empty");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw ValidationError("train_fraction must lie in [0, 1]");
  }
  learning.validate();
}

PopulationPrior population_prior(std::span<const AnnotationRecord> records) {
  if (records.empty()) throw ValidationError("population prior needs at least one record");
  PopulationPrior prior;
  std::vector<SeverityVector> history;
  history.reserve(records.size());
  for (const auto& r : records) history.push_back(r.severities);
  for (Dimension d : kAllDimensions) {
    std::vector<double> column;
    column.reserve(records.size());
    for (const auto& r : records) column.push_back(r.severities[d]);
    prior.thresholds[d] = median(std::move(column));
  }
  prior.weights = recompute_weights(history);
  return prior;
}

FeedbackEvent to_feedback(const AnnotationRecord& record) {
  FeedbackEvent e;
  e.content_id = record.comment_id;
  e.content_text = record.text;
  e.label = record.label();
  e.severities = record.severities;
  return e;
}

ProfileRecord build_profile_from_annotations(const std::string& user_id,
                                             std::span<const AnnotationRecord> records,
                                             std::optional<std::size_t> k,
                                             const PopulationPrior& prior,
                                             const LearningConfig& config) {
  const std::size_t n = k.value_or(records.size());
  if (n > records.size()) throw ValidationError("prefix length exceeds the annotation count");
  ProfileRecord profile = init_profile(user_id, prior);
  std::vector<SeverityVector> history;
  for (std::size_t i = 0; i < n; ++i) {
    profile = apply_feedback(profile, records[i].label(), records[i].severities, config);
    history.push_back(records[i].severities);
  }
  if (n > 0) profile.weights = recompute_weights(history);
  return profile;
}

Label universal_baseline(const AnnotationRecord& record) {
  return record.hate_score > 0.5 ? Label::flag : Label::keep;
}

EvalDeps mock_eval_deps(std::shared_ptr<const Lexicon> lexicon) {
  EvalDeps deps;
  deps.lexicon = lexicon ? std::move(lexicon) : std::make_shared<Lexicon>();
  GatewayConfig config;
  config.mode = GatewayMode::mock;
  deps.gateway = std::make_shared<LlmGateway>(config, nullptr, make_mock_responder(deps.lexicon));
  return deps;
}

std::size_t train_size(std::size_t n, double fraction, std::size_t holdout) {
  const auto wanted = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  const std::size_t cap = n > holdout ? n - holdout : 0;
  return std::min(wanted, cap);
}

std::vector<Label> classify(Condition condition, const ProfileRecord& profile,
                            std::span<const AnnotationRecord> test, const PopulationPrior& prior,
                            const EvalDeps& deps) {
  std::vector<Label> out;
  out.reserve(test.size());
  if (condition == Condition::universal) {
    for (const auto& r : test) out.push_back(universal_baseline(r));
    return out;
  }
  if (!deps.gateway) throw ConfigError("model-backed conditions need a gateway");

  OrchestratorDeps od;
  od.store = make_memory_store();
  od.prior = prior;
  od.lexicon = deps.lexicon;
  od.gateway = deps.gateway;
  od.calibration = deps.calibration;
  od.clock = fixed_clock(Timestamp{});
  od.parallel_experts = false;
  od.store->save_profile(profile);
  Orchestrator orchestrator(std::move(od));

  for (const auto& r : test) {
    if (condition == Condition::single_agent) {
      out.push_back(orchestrator.classify_single_agent(profile, r.text).decision);
    } else {
      const auto decision = orchestrator.moderate({profile.user_id, r.comment_id, r.text});
      out.push_back(decision.verdict == Verdict::hide ? Label::flag : Label::keep);
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::span<const AnnotationRecord> records,
                                const std::vector<std::string>& annotators, const EvalDeps& deps) {
  config.validate();
  ExperimentResult result;
  result.condition = config.condition;
  result.prior = population_prior(records);
  const auto grouped = group_by_annotator(records);

  Confusion pooled;
  for (const std::string& id : annotators) {
    ProfileResult pr;
    pr.annotator_id = id;
    const auto it = grouped.find(id);
    if (it == grouped.end()) {
      pr.error = "annotator not in dataset";
      result.profiles.push_back(std::move(pr));
      continue;
    }
    const std::vector<AnnotationRecord>& seq = it->second;
    pr.n_train = train_size(seq.size(), config.train_fraction, config.holdout);
    pr.n_test = seq.size() - pr.n_train;
    if (pr.n_test == 0) {
      pr.error = "no held-out annotations";
      result.profiles.push_back(std::move(pr));
      continue;
    }
    try {
      const std::span<const AnnotationRecord> all(seq);
      const ProfileRecord profile = build_profile_from_annotations(
          id, all.first(pr.n_train), std::nullopt, result.prior, config.learning);
      const auto test = all.subspan(pr.n_train);
      const std::vector<Label> predictions =
          classify(config.condition, profile, test, result.prior, deps);
      std::vector<Label> labels;
      for (const auto& r : test) labels.push_back(r.label());
      const Confusion c = confusion_of(predictions, labels);
      pooled += c;
      pr.metrics = metrics_from_confusion(c);
    } catch (const Error& e) {
      pr.error = e.what();
    }
    result.profiles.push_back(std::move(pr));
  }
  result.pooled = metrics_from_confusion(pooled);
  return result;
}

std::vector<CurveRow> run_learning_curve(const ExperimentConfig& config,
                                         std::span<const AnnotationRecord> records,
                                         const std::vector<std::string>& annotators,
                                         const EvalDeps& deps) {
  config.validate();
  const PopulationPrior prior = population_prior(records);
  const auto grouped = group_by_annotator(records);
  std::vector<CurveRow> rows;
  for (std::size_t k = config.k_min; k <= config.k_max; ++k) {
    CurveRow row;
    row.k = k;
    double sum = 0.0;
    for (const std::string& id : annotators) {
      const auto it = grouped.find(id);
      if (it == grouped.end() || it->second.size() < k + config.holdout) continue;
      const std::span<const AnnotationRecord> all(it->second);
      const ProfileRecord profile =
          build_profile_from_annotations(id, all, k, prior, config.learning);
      const auto test = all.subspan(k);
      const std::vector<Label> predictions = classify(config.condition, profile, test, prior, deps);
      std::vector<Label> labels;
      for (const auto& r : test) labels.push_back(r.label());
      sum += compute_metrics(predictions, labels).macro_f1;
      ++row.n_profiles;
    }
    if (row.n_profiles > 0) row.mean_f1 = sum / static_cast<double>(row.n_profiles);
    rows.push_back(row);
  }
  return rows;
}

std::string format_curve_csv(std::span<const CurveRow> rows) {
  std::string out = "k,mean_f1,n_profiles\n";
  char buf[64];
  for (const auto& r : rows) {
    if (r.mean_f1) {
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%zu\n", r.k, *r.mean_f1, r.n_profiles);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,,%zu\n", r.k, r.n_profiles);
    }
    out += buf;
  }
  return out;
}

}  // namespace prism::eval
