#include "shary/scheduler/reservation.hpp"

namespace shary::scheduler {

std::string_view to_string(ReservationState s) {
  switch (s) {
    case ReservationState::queued: return "queued";
    case ReservationState::confirmed: return "confirmed";
    case ReservationState::active: return "active";
    case ReservationState::completed: return "completed";
    case ReservationState::released: return "released";
    case ReservationState::preempted: return "preempted";
    case ReservationState::cancelled: return "cancelled";
    case ReservationState::expired: return "expired";
  }
  return "queued";
}

std::optional<ReservationState> parse_state(std::string_view t) {
  for (auto s : {ReservationState::queued, ReservationState::confirmed, ReservationState::active,
                 ReservationState::completed, ReservationState::released, ReservationState::preempted,
                 ReservationState::cancelled, ReservationState::expired})
    if (to_string(s) == t) return s;
  return std::nullopt;
}

std::string_view to_string(SessionMode m) { return m == SessionMode::batch ? "batch" : "interactive"; }

std::optional<SessionMode> parse_mode(std::string_view t) {
  if (t == "interactive") return SessionMode::interactive;
  if (t == "batch") return SessionMode::batch;
  return std::nullopt;
}

bool can_transition(ReservationState from, ReservationState to) {
  using S = ReservationState;
  switch (from) {
    case S::queued: return to == S::confirmed || to == S::cancelled || to == S::expired;
    case S::confirmed: return to == S::active || to == S::cancelled || to == S::preempted;
    case S::active: return to == S::completed || to == S::released || to == S::preempted;
    default: return false;
  }
}

bool Reservation::is_terminal() const {
  switch (state) {
    case ReservationState::completed:
    case ReservationState::released:
    case ReservationState::preempted:
    case ReservationState::cancelled:
    case ReservationState::expired: return true;
    default: return false;
  }
}

}  // namespace shary::scheduler
