#include "prism/eval/severity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "prism/errors.hpp"
#include "prism/eval/random.hpp"

namespace prism::eval {
namespace {

double mean_severity(const AnnotationRecord& r) {
  double sum = 0.0;
  for (Dimension d : kAllDimensions) sum += r.severities[d];
  return sum / static_cast<double>(kDimensionCount);
}

}  // namespace

std::string_view category_name(SeverityCategory c) noexcept {
  switch (c) {
    case SeverityCategory::very_strict: return "very_strict";
    case SeverityCategory::strict: return "strict";
    case SeverityCategory::moderate: return "moderate";
    case SeverityCategory::lenient: return "lenient";
    case SeverityCategory::very_lenient: return "very_lenient";
  }
  return "unknown";
}

std::optional<SeverityCategory> parse_category(std::string_view name) noexcept {
  for (SeverityCategory c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

SeverityCategory categorize_severity(double alpha) {
  if (!std::isfinite(alpha)) throw ValidationError("annotator severity must be finite");
  if (alpha < -1.0) return SeverityCategory::very_strict;
  if (alpha < -0.3) return SeverityCategory::strict;
  if (alpha < 0.3) return SeverityCategory::moderate;
  if (alpha < 1.0) return SeverityCategory::lenient;
  return SeverityCategory::very_lenient;
}

SeverityEstimate annotator_severity_proxy(std::span<const AnnotationRecord> records) {
  SeverityEstimate out;
  const bool all_precomputed =
      !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) {
        return r.annotator_severity.has_value();
      });
  if (all_precomputed) {
    out.passthrough = true;
    for (const auto& r : records) out.alpha.emplace(r.annotator_id, *r.annotator_severity);
    return out;
  }

  struct CommentTotals {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, CommentTotals> comments;
  for (const auto& r : records) {
    auto& c = comments[r.comment_id];
    c.sum += mean_severity(r);
    ++c.n;
  }

  struct Deviation {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Deviation> raw;
  std::set<std::string> annotators;
  for (const auto& r : records) {
    annotators.insert(r.annotator_id);
    const auto& c = comments[r.comment_id];
    if (c.n < 2) continue;
    const double own = mean_severity(r);
    const double peers = (c.sum - own) / static_cast<double>(c.n - 1);
    auto& dev = raw[r.annotator_id];
    dev.sum += peers - own;
    ++dev.n;
  }
  for (const auto& a : annotators) {
    if (!raw.count(a)) out.warnings.push_back("annotator " + a + " has no co-rated comments; excluded");
  }
  if (raw.empty()) return out;

  std::map<std::string, double> means;
  double total = 0.0;
  for (const auto& [id, dev] : raw) {
    means[id] = dev.sum / static_cast<double>(dev.n);
    total += means[id];
  }
  const double mu = total / static_cast<double>(means.size());
  double ss = 0.0;
  for (const auto& [_, m] : means) ss += (m - mu) * (m - mu);
  const double sd = std::sqrt(ss / static_cast<double>(means.size()));
  for (const auto& [id, m] : means) out.alpha[id] = sd > 0.0 ? (m - mu) / sd : 0.0;
  return out;
}

Selection select_profiles(std::vector<PoolEntry> pool, std::size_t n, std::uint64_t seed,
                          std::size_t min_count, std::size_t max_count) {
  std::erase_if(pool, [&](const PoolEntry& e) { return e.count < min_count || e.count > max_count; });
  std::sort(pool.begin(), pool.end(),
            [](const PoolEntry& a, const PoolEntry& b) { return a.annotator_id < b.annotator_id; });

  Selection out;
  Rng rng(seed);
  const std::size_t quota = n / kAllCategories.size();
  std::vector<bool> taken(pool.size(), false);
  for (SeverityCategory c : kAllCategories) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].category == c) members.push_back(i);
    }
    const std::size_t want = std::min(quota, members.size());
    for (std::size_t pick : rng.sample(members.size(), want)) {
      taken[members[pick]] = true;
      out.annotators.push_back(pool[members[pick]].annotator_id);
    }
    out.per_category[c] = want;
    if (want < quota) {
      out.warnings.push_back(std::string(category_name(c)) + ": only " + std::to_string(want) +
                             " of " + std::to_string(quota) + " available");
    }
  }

  if (out.annotators.size() < n) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!taken[i]) rest.push_back(i);
    }
    const std::size_t want = std::min(n - out.annotators.size(), rest.size());
    for (std::size_t pick : rng.sample(rest.size(), want)) {
      out.annotators.push_back(pool[rest[pick]].annotator_id);
      ++out.per_category[pool[rest[pick]].category];
    }
    out.top_ups = want;
  }
  if (out.annotators.size() < n) {
    out.warnings.push_back("eligible pool holds " + std::to_string(out.annotators.size()) +
                           " annotators, fewer than the " + std::to_string(n) + " requested");
  }
  return out;
}

Selection select_from_dataset(std::span<const AnnotationRecord> records, std::size_t n,
                              std::uint64_t seed, std::size_t min_count, std::size_t max_count) {
  const SeverityEstimate estimate = annotator_severity_proxy(records);
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.annotator_id];
  std::vector<PoolEntry> pool;
  for (const auto& [id, alpha] : estimate.alpha) {
    pool.push_back({id, counts[id], categorize_severity(alpha)});
  }
  Selection out = select_profiles(std::move(pool), n, seed, min_count, max_count);
  out.warnings.insert(out.warnings.begin(), estimate.warnings.begin(), estimate.warnings.end());
  return out;
}

}  // namespace prism::eval
