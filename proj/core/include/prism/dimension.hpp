#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace prism {

/// The ten harm facets content is scored on. Declaration order is the
/// canonical serialization order.
enum class Dimension : std::uint8_t {
  sentiment,
  respect,
  insult,
  humiliate,
  status,
  dehumanise,
  violence,
  genocide,
  attack_defend,
  toxicity,
};

inline constexpr std::size_t kDimensionCount = 10;

inline constexpr std::array<Dimension, kDimensionCount> kAllDimensions{
    Dimension::sentiment, Dimension::respect,    Dimension::insult,   Dimension::humiliate,
    Dimension::status,    Dimension::dehumanise, Dimension::violence, Dimension::genocide,
    Dimension::attack_defend, Dimension::toxicity,
};

constexpr std::size_t index_of(Dimension d) noexcept { return static_cast<std::size_t>(d); }

std::string_view dimension_name(Dimension d) noexcept;

/// Accepts the canonical names only ("attack_defend", "dehumanise").
std::optional<Dimension> parse_dimension(std::string_view name) noexcept;

/// Fixed-size map keyed by Dimension; always complete over all ten members.
template <typename T>
class PerDimension {
 public:
  constexpr PerDimension() = default;
  constexpr explicit PerDimension(const T& fill) { values_.fill(fill); }
  constexpr explicit PerDimension(const std::array<T, kDimensionCount>& values) : values_(values) {}

  constexpr T& operator[](Dimension d) noexcept { return values_[index_of(d)]; }
  constexpr const T& operator[](Dimension d) const noexcept { return values_[index_of(d)]; }

  constexpr auto begin() noexcept { return values_.begin(); }
  constexpr auto end() noexcept { return values_.end(); }
  constexpr auto begin() const noexcept { return values_.begin(); }
  constexpr auto end() const noexcept { return values_.end(); }

  constexpr const std::array<T, kDimensionCount>& values() const noexcept { return values_; }

  friend constexpr bool operator==(const PerDimension&, const PerDimension&) = default;

 private:
  std::array<T, kDimensionCount> values_{};
};

}  // namespace prism
