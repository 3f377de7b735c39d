#pragma once

// Independent reference implementations. Nothing here calls into the
// library; every value is recomputed from plain arrays so the library code
// can be checked against it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

constexpr int D = 10;
using Vec = std::array<double, D>;

struct Profile {
  Vec t{};
  long n = 0;
};

// One feedback event, written out step by step.
inline void update(Profile& p, bool flag, const Vec& s) {
  p.n = p.n + 1;
  double kappa = p.n / 100.0;
  if (kappa > 1.0) kappa = 1.0;
  const double alpha = 0.1 + 0.2 * (1.0 - kappa);
  if (flag) {
    for (int d = 0; d < D; ++d) {
      if (s[d] < p.t[d]) p.t[d] = (1.0 - alpha) * p.t[d] + alpha * s[d];
    }
  } else {
    for (int d = 0; d < D; ++d) {
      if (s[d] > p.t[d] + 0.1) p.t[d] = (1.0 - alpha) * p.t[d] + alpha * s[d];
    }
  }
}

// Two-pass population standard deviation per dimension.
inline Vec sigma(const std::vector<Vec>& h) {
  Vec out{};
  if (h.size() < 2) return out;
  for (int d = 0; d < D; ++d) {
    double sum = 0.0;
    for (const auto& v : h) sum += v[d];
    const double mean = sum / static_cast<double>(h.size());
    double ss = 0.0;
    for (const auto& v : h) ss += (v[d] - mean) * (v[d] - mean);
    out[d] = std::sqrt(ss / static_cast<double>(h.size()));
  }
  return out;
}

struct Scores {
  double p_hate, r_hate, f_hate;
  double p_neu, r_neu, f_neu;
  double macro_f1, accuracy, kappa;
  long tp, fp, fn, tn;
};

inline double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

// Brute force from label lists; true = hate.
inline Scores score(const std::vector<bool>& pred, const std::vector<bool>& gold) {
  Scores s{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && gold[i]) ++s.tp;
    if (pred[i] && !gold[i]) ++s.fp;
    if (!pred[i] && gold[i]) ++s.fn;
    if (!pred[i] && !gold[i]) ++s.tn;
  }
  const double n = static_cast<double>(pred.size());
  s.p_hate = ratio(s.tp, s.tp + s.fp);
  s.r_hate = ratio(s.tp, s.tp + s.fn);
  s.f_hate = ratio(2 * s.p_hate * s.r_hate, s.p_hate + s.r_hate);
  s.p_neu = ratio(s.tn, s.tn + s.fn);
  s.r_neu = ratio(s.tn, s.tn + s.fp);
  s.f_neu = ratio(2 * s.p_neu * s.r_neu, s.p_neu + s.r_neu);
  s.macro_f1 = (s.f_hate + s.f_neu) / 2;
  s.accuracy = ratio(s.tp + s.tn, n);
  long pred_hate = 0, gold_hate = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred_hate += pred[i];
    gold_hate += gold[i];
  }
  const double pe = (pred_hate * gold_hate + (n - pred_hate) * (n - gold_hate)) / (n * n);
  if (pe == 1.0) {
    s.kappa = s.accuracy == 1.0 ? 1.0 : 0.0;
  } else {
    s.kappa = (s.accuracy - pe) / (1.0 - pe);
  }
  return s;
}

// Ground-truth rule of the synthetic population: flag iff the weighted
// exceedance is positive.
inline bool exceeds(const Vec& w, const Vec& s, const Vec& t) {
  double total = 0.0;
  for (int d = 0; d < D; ++d) total += w[d] * (s[d] - t[d]);
  return total > 0.0;
}

}  // namespace oracle
