#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace maxent {

using BucketIndex = std::uint32_t;
using StatId = std::uint32_t;

/// Closed interval of bucket indices [lo, hi].
struct Interval {
  BucketIndex lo = 0;
  BucketIndex hi = 0;

  constexpr bool contains(BucketIndex v) const noexcept { return lo <= v && v <= hi; }
  constexpr std::uint32_t length() const noexcept { return hi - lo + 1; }
  constexpr bool overlaps(const Interval& o) const noexcept { return lo <= o.hi && o.lo <= hi; }
  constexpr Interval intersect(const Interval& o) const noexcept {
    return {std::max(lo, o.lo), std::min(hi, o.hi)};
  }
  friend constexpr bool operator==(const Interval&, const Interval&) = default;
  friend constexpr auto operator<=>(const Interval&, const Interval&) = default;
};

/// One range per attribute; nullopt means TRUE (attribute unconstrained).
using RangePredicate = std::vector<std::optional<Interval>>;

inline RangePredicate all_true(std::size_t m) { return RangePredicate(m); }

inline bool satisfies(const RangePredicate& pred, const std::vector<BucketIndex>& coords) {
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && !pred[i]->contains(coords[i])) return false;
  }
  return true;
}

}  // namespace maxent
