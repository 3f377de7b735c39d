#include "prism/eval/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

#include "prism/errors.hpp"

namespace prism::eval {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

struct DiffStats {
  double mean;
  double sd;
  std::size_t n;
};

DiffStats differences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired samples must have equal length");
  if (a.size() < 2) throw ValidationError("paired samples need at least two pairs");
  std::vector<double> d(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d[i] = a[i] - b[i];
    sum += d[i];
  }
  const double mean = sum / static_cast<double>(d.size());
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  if (!(sd > 0.0)) throw UndefinedStatisticError("differences have zero variance");
  return {mean, sd, d.size()};
}

}  // namespace

Confusion& Confusion::operator+=(const Confusion& o) noexcept {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Confusion confusion_of(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("predictions and labels differ in length");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == Label::flag;
    const bool y = labels[i] == Label::flag;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricsReport metrics_from_confusion(const Confusion& c) {
  MetricsReport r;
  r.confusion = c;
  r.support = c.total();
  r.hate.support = c.tp + c.fn;
  r.hate.precision = ratio(c.tp, c.tp + c.fp);
  r.hate.recall = ratio(c.tp, c.tp + c.fn);
  r.hate.f1 = harmonic(r.hate.precision, r.hate.recall);
  r.neutral.support = c.tn + c.fp;
  r.neutral.precision = ratio(c.tn, c.tn + c.fn);
  r.neutral.recall = ratio(c.tn, c.tn + c.fp);
  r.neutral.f1 = harmonic(r.neutral.precision, r.neutral.recall);
  r.macro_precision = (r.hate.precision + r.neutral.precision) / 2.0;
  r.macro_recall = (r.hate.recall + r.neutral.recall) / 2.0;
  r.macro_f1 = (r.hate.f1 + r.neutral.f1) / 2.0;
  r.accuracy = ratio(c.tp + c.tn, r.support);

  if (r.support > 0) {
    const double n = static_cast<double>(r.support);
    const double po = static_cast<double>(c.tp + c.tn) / n;
    const double pe = (static_cast<double>(c.tp + c.fp) * static_cast<double>(c.tp + c.fn) +
                       static_cast<double>(c.fn + c.tn) * static_cast<double>(c.fp + c.tn)) /
                      (n * n);
    if (pe == 1.0) {
      r.cohen_kappa = po == 1.0 ? 1.0 : 0.0;
    } else {
      r.cohen_kappa = (po - pe) / (1.0 - pe);
    }
  }
  return r;
}

MetricsReport compute_metrics(std::span<const Label> predictions, std::span<const Label> labels) {
  if (labels.empty()) throw ValidationError("metrics need at least one instance");
  return metrics_from_confusion(confusion_of(predictions, labels));
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  const auto cls = [](const ClassMetrics& m) {
    nlohmann::ordered_json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["support"] = m.support;
    return j;
  };
  nlohmann::ordered_json j;
  j["macro_f1"] = report.macro_f1;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["accuracy"] = report.accuracy;
  j["cohen_kappa"] = report.cohen_kappa;
  j["support"] = report.support;
  j["hate"] = cls(report.hate);
  j["neutral"] = cls(report.neutral);
  j["confusion"] = {{"tp", report.confusion.tp},
                    {"fp", report.confusion.fp},
                    {"fn", report.confusion.fn},
                    {"tn", report.confusion.tn}};
  return j;
}

std::string format_report(const MetricsReport& r) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %10s %10s\n", "class", "precision", "recall",
                "f1", "support");
  out += buf;
  const auto row = [&](const char* name, const ClassMetrics& m) {
    std::snprintf(buf, sizeof buf, "%-10s %10.4f %10.4f %10.4f %10zu\n", name, m.precision,
                  m.recall, m.f1, m.support);
    out += buf;
  };
  row("hate", r.hate);
  row("neutral", r.neutral);
  std::snprintf(buf, sizeof buf, "%-10s %10.4f %10.4f %10.4f %10zu\n", "macro", r.macro_precision,
                r.macro_recall, r.macro_f1, r.support);
  out += buf;
  std::snprintf(buf, sizeof buf, "accuracy %.4f  kappa %.4f  tp %zu fp %zu fn %zu tn %zu\n",
                r.accuracy, r.cohen_kappa, r.confusion.tp, r.confusion.fp, r.confusion.fn,
                r.confusion.tn);
  out += buf;
  return out;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  const DiffStats s = differences(a, b);
  TTestResult out;
  out.df = s.n - 1;
  out.t = s.mean / (s.sd / std::sqrt(static_cast<double>(s.n)));
  const boost::math::students_t dist(static_cast<double>(out.df));
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
  return out;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  const DiffStats s = differences(a, b);
  return s.mean / s.sd;
}

}  // namespace prism::eval
