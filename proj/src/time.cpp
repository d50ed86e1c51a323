#include "shary/time.hpp"

#include <charconv>
#include <cstdio>

namespace shary {
namespace {

// Proleptic Gregorian day counting (H. Hinnant's civil calendar algorithms).
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m;
  unsigned d;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

bool read_fixed(std::string_view s, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  auto res = std::from_chars(s.data() + pos, s.data() + pos + width, out);
  return res.ec == std::errc{};
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) return 29;
  return kDays[m - 1];
}

}  // namespace

std::string format_iso(Minute t) {
  const Minute day = floor_div(t, kDay);
  const Minute rem = t - day * kDay;
  const Civil c = civil_from_days(day);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lldZ", static_cast<long long>(c.y), c.m, c.d,
                static_cast<long long>(rem / 60), static_cast<long long>(rem % 60));
  return buf;
}

std::optional<Minute> parse_iso(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_fixed(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !read_fixed(s, 5, 2, mo) || s[7] != '-' ||
      !read_fixed(s, 8, 2, d))
    return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || static_cast<unsigned>(d) > days_in_month(y, static_cast<unsigned>(mo)))
    return std::nullopt;
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' || !read_fixed(s, pos + 1, 2, h) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_fixed(s, pos + 4, 2, mi))
      return std::nullopt;
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      if (!read_fixed(s, pos + 1, 2, sec) || sec != 0) return std::nullopt;
      pos += 3;
    }
    if (pos + 1 != s.size() || s[pos] != 'Z') return std::nullopt;
    if (h > 23 || mi > 59) return std::nullopt;
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * kDay + h * 60 + mi;
}

std::optional<Minute> parse_duration(std::string_view s) {
  if (s.empty()) return std::nullopt;
  Minute scale = 1;
  switch (s.back()) {
    case 'm': scale = 1; s.remove_suffix(1); break;
    case 'h': scale = kHour; s.remove_suffix(1); break;
    case 'd': scale = kDay; s.remove_suffix(1); break;
    default: break;
  }
  if (s.empty()) return std::nullopt;
  Minute v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < 0) return std::nullopt;
  if (v > (Minute{1} << 40) / scale) return std::nullopt;
  return v * scale;
}

std::string format_duration(Minute d) {
  if (d != 0 && d % kDay == 0) return std::to_string(d / kDay) + "d";
  if (d != 0 && d % kHour == 0) return std::to_string(d / kHour) + "h";
  return std::to_string(d) + "m";
}

std::string to_string(const Interval& iv) { return "[" + format_iso(iv.start) + ", " + format_iso(iv.end) + ")"; }

}  // namespace shary
