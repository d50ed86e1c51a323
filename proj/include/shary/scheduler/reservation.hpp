#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shary/catalog/catalog.hpp"
#include "shary/time.hpp"

namespace shary::scheduler {

using ReservationId = std::uint64_t;

enum class ReservationState { queued, confirmed, active, completed, released, preempted, cancelled, expired };
enum class SessionMode { interactive, batch };

std::string_view to_string(ReservationState s);
std::optional<ReservationState> parse_state(std::string_view text);
std::string_view to_string(SessionMode m);
std::optional<SessionMode> parse_mode(std::string_view text);

/// queued->{confirmed,cancelled,expired}; confirmed->{active,cancelled,preempted};
/// active->{completed,released,preempted}.
bool can_transition(ReservationState from, ReservationState to);

struct Reservation {
  ReservationId id = 0;
  std::string user;
  std::string tier;
  int tier_rank = 1;
  std::string policy;

  /// Empty while a batch job waits for placement; `kind` then selects candidate resources.
  std::string resource;
  catalog::ResourceKind kind = catalog::ResourceKind::compute;
  int unit_count = 1;
  std::vector<int> units;  // ascending; assigned once the reservation holds capacity

  Interval interval;  // held interval; truncated by early release or preemption
  Interval booked;    // interval as originally confirmed
  Minute duration = 0;
  std::optional<Minute> deadline;

  SessionMode mode = SessionMode::interactive;
  ReservationState state = ReservationState::queued;
  Minute created_at = 0;
  Minute updated_at = 0;
  std::optional<std::int64_t> bid;
  std::optional<std::uint64_t> auction;

  bool holds_capacity() const {
    return state == ReservationState::confirmed || state == ReservationState::active;
  }
  bool is_terminal() const;
  bool is_floating() const { return resource.empty(); }

  bool operator==(const Reservation&) const = default;
};

struct Actor {
  std::string user;
  bool admin = false;
};

}  // namespace shary::scheduler
