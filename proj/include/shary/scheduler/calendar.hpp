#pragma once

#include <map>
#include <vector>

#include "shary/scheduler/reservation.hpp"
#include "shary/time.hpp"

namespace shary::scheduler {

/// Bookings on one unit. Intervals never overlap, so an ordered map keyed by start answers
/// overlap queries with one predecessor probe plus a forward scan.
class UnitCalendar {
 public:
  bool is_free(Interval iv) const;
  /// Throws overlap if any booking intersects `iv`.
  void insert(Interval iv, ReservationId id);
  bool erase(Interval iv, ReservationId id);

  std::vector<ReservationId> overlapping(Interval iv) const;
  /// Maximal free sub-intervals of `window`, sorted by start.
  std::vector<Interval> free_within(Interval window) const;
  /// Ends of bookings that finish in [from, until].
  void booking_ends(Minute from, Minute until, std::vector<Minute>& out) const;

  std::size_t size() const { return bookings_.size(); }

 private:
  struct Booking {
    Minute end;
    ReservationId id;
  };
  std::map<Minute, Booking> bookings_;
};

class ResourceCalendar {
 public:
  explicit ResourceCalendar(int units = 0) : units_(static_cast<std::size_t>(units)) {}

  int unit_count() const { return static_cast<int>(units_.size()); }
  UnitCalendar& unit(int index) { return units_.at(static_cast<std::size_t>(index)); }
  const UnitCalendar& unit(int index) const { return units_.at(static_cast<std::size_t>(index)); }

  /// Units free over the whole interval, ascending.
  std::vector<int> free_units(Interval iv) const;

 private:
  std::vector<UnitCalendar> units_;
};

}  // namespace shary::scheduler
