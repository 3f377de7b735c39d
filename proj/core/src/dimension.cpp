#include "prism/dimension.hpp"

namespace prism {
namespace {

constexpr std::array<std::string_view, kDimensionCount> kNames{
    "sentiment", "respect",  "insult",   "humiliate",     "status",
    "dehumanise", "violence", "genocide", "attack_defend", "toxicity",
};

}  // namespace

std::string_view dimension_name(Dimension d) noexcept { return kNames[index_of(d)]; }

std::optional<Dimension> parse_dimension(std::string_view name) noexcept {
  for (Dimension d : kAllDimensions) {
    if (kNames[index_of(d)] == name) return d;
  }
  return std::nullopt;
}

}  // namespace prism
