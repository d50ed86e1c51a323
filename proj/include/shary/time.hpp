#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace shary {

/// Whole minutes since 1970-01-01T00:00Z. Every timestamp in the system uses this unit.
using Minute = std::int64_t;

inline constexpr Minute kGranularity = 15;
inline constexpr Minute kHour = 60;
inline constexpr Minute kDay = 24 * kHour;

constexpr Minute floor_div(Minute a, Minute b) {
  Minute q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

constexpr bool is_aligned(Minute t) { return t % kGranularity == 0; }
constexpr Minute align_down(Minute t) { return floor_div(t, kGranularity) * kGranularity; }
constexpr Minute align_up(Minute t) { return is_aligned(t) ? t : align_down(t) + kGranularity; }

/// Half-open interval [start, end).
struct Interval {
  Minute start = 0;
  Minute end = 0;

  constexpr Minute length() const { return end > start ? end - start : 0; }
  constexpr bool empty() const { return end <= start; }
  constexpr bool contains(Minute t) const { return start <= t && t < end; }
  constexpr bool overlaps(const Interval& o) const { return start < o.end && o.start < end; }
  constexpr bool covers(const Interval& o) const { return start <= o.start && o.end <= end; }
  constexpr Interval intersect(const Interval& o) const {
    Interval r{start > o.start ? start : o.start, end < o.end ? end : o.end};
    if (r.end < r.start) r.end = r.start;
    return r;
  }
  constexpr bool aligned() const { return is_aligned(start) && is_aligned(end); }

  auto operator<=>(const Interval&) const = default;
};

/// "YYYY-MM-DDTHH:MMZ"
std::string format_iso(Minute t);

/// Accepts "YYYY-MM-DDTHH:MM[:SS]Z" (seconds must be zero) and "YYYY-MM-DD".
std::optional<Minute> parse_iso(std::string_view text);

/// Parses "90", "90m", "2h", "7d".
std::optional<Minute> parse_duration(std::string_view text);
std::string format_duration(Minute d);

std::string to_string(const Interval& iv);

}  // namespace shary
