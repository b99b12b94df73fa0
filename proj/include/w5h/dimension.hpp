#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace w5h {

// The six contextual dimensions. The first five, in this order, are the
// feature-bearing ones; why is carried only so record formats stay stable.
enum class Dim : uint8_t { What = 0, Who = 1, When = 2, Where = 3, How = 4, Why = 5 };

inline constexpr int kNumDims = 6;
inline constexpr int kNumFeatureDims = 5;
inline constexpr std::array<Dim, kNumFeatureDims> kFeatureDims = {
    Dim::What, Dim::Who, Dim::When, Dim::Where, Dim::How};

// What each dimension's items are. The dimension fixes the kind: what holds
// terms, who/where hold entities/locations, when holds time tokens, how holds
// source tags.
enum class ItemKind : uint8_t { Term, Entity, TimeToken, Location, SourceTag };

constexpr ItemKind item_kind(Dim d) {
  switch (d) {
    case Dim::What: return ItemKind::Term;
    case Dim::Who: return ItemKind::Entity;
    case Dim::When: return ItemKind::TimeToken;
    case Dim::Where: return ItemKind::Location;
    case Dim::How: return ItemKind::SourceTag;
    case Dim::Why: return ItemKind::Term;
  }
  return ItemKind::Term;
}

constexpr std::string_view dim_name(Dim d) {
  constexpr std::string_view names[kNumDims] = {"what", "who", "when", "where", "how", "why"};
  return names[static_cast<size_t>(d)];
}

std::optional<Dim> dim_from_name(std::string_view name);

// Bitmask over the five feature dimensions, bit i == Dim(i).
using DimMask = uint8_t;

constexpr DimMask dim_bit(Dim d) { return static_cast<DimMask>(1u << static_cast<unsigned>(d)); }
constexpr bool mask_has(DimMask m, Dim d) { return (m & dim_bit(d)) != 0; }
constexpr int mask_size(DimMask m) { return __builtin_popcount(m); }

inline constexpr DimMask kAllFeatureDims =
    dim_bit(Dim::What) | dim_bit(Dim::Who) | dim_bit(Dim::When) | dim_bit(Dim::Where) | dim_bit(Dim::How);

}  // namespace w5h
