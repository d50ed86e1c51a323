#include "shary/scheduler/calendar.hpp"

#include <iterator>

#include "shary/error.hpp"

namespace shary::scheduler {

std::vector<ReservationId> UnitCalendar::overlapping(Interval iv) const {
  std::vector<ReservationId> out;
  if (iv.empty()) return out;
  auto it = bookings_.lower_bound(iv.start);
  if (it != bookings_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.end > iv.start) out.push_back(prev->second.id);
  }
  for (; it != bookings_.end() && it->first < iv.end; ++it) out.push_back(it->second.id);
  return out;
}

bool UnitCalendar::is_free(Interval iv) const {
  if (iv.empty()) return true;
  auto it = bookings_.lower_bound(iv.start);
  if (it != bookings_.end() && it->first < iv.end) return false;
  if (it != bookings_.begin() && std::prev(it)->second.end > iv.start) return false;
  return true;
}

void UnitCalendar::insert(Interval iv, ReservationId id) {
  if (iv.empty()) return;
  if (!is_free(iv)) throw Error(ErrorCode::overlap, "interval " + to_string(iv) + " overlaps an existing booking");
  bookings_.emplace(iv.start, Booking{iv.end, id});
}

bool UnitCalendar::erase(Interval iv, ReservationId id) {
  auto it = bookings_.find(iv.start);
  if (it == bookings_.end() || it->second.id != id) return false;
  bookings_.erase(it);
  return true;
}

std::vector<Interval> UnitCalendar::free_within(Interval window) const {
  std::vector<Interval> out;
  if (window.empty()) return out;
  Minute cursor = window.start;
  auto it = bookings_.lower_bound(window.start);
  if (it != bookings_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.end > cursor) cursor = prev->second.end;
  }
  for (; it != bookings_.end() && it->first < window.end; ++it) {
    if (it->first > cursor) out.push_back({cursor, it->first});
    if (it->second.end > cursor) cursor = it->second.end;
  }
  if (cursor < window.end) out.push_back({cursor, window.end});
  return out;
}

void UnitCalendar::booking_ends(Minute from, Minute until, std::vector<Minute>& out) const {
  auto it = bookings_.lower_bound(from);
  if (it != bookings_.begin()) {
    auto prev = std::prev(it);
    if (prev->second.end >= from && prev->second.end <= until) out.push_back(prev->second.end);
  }
  for (; it != bookings_.end() && it->first <= until; ++it)
    if (it->second.end >= from && it->second.end <= until) out.push_back(it->second.end);
}

std::vector<int> ResourceCalendar::free_units(Interval iv) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < units_.size(); ++i)
    if (units_[i].is_free(iv)) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace shary::scheduler
