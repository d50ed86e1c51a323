#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shary/scheduler/reservation.hpp"
#include "shary/time.hpp"

namespace shary::broker {

/// Derived access right: `user` may use one unit of `resource` over `valid`.
struct AccessGrant {
  std::string user;
  std::string resource;
  int unit = 0;
  Interval valid;

  auto operator<=>(const AccessGrant&) const = default;
};

/// A logged-in tenant on a unit. Sessions outlive revoked grants until terminated.
struct SessionKey {
  std::string user;
  std::string resource;
  int unit = 0;

  auto operator<=>(const SessionKey&) const = default;
};

inline SessionKey session_of(const AccessGrant& g) { return {g.user, g.resource, g.unit}; }

using GrantSet = std::set<AccessGrant>;

struct DriverSnapshot {
  GrantSet grants;
  std::set<SessionKey> sessions;

  bool operator==(const DriverSnapshot&) const = default;
};

enum class ActionKind { grant, revoke, terminate_best_effort };
std::string_view to_string(ActionKind k);

struct DriverAction {
  ActionKind kind = ActionKind::grant;
  AccessGrant target;  // valid is unused for terminate_best_effort
  std::string reason;

  bool operator==(const DriverAction&) const = default;
};

/// One grant per unit of every active reservation, plus confirmed ones whose start has arrived.
GrantSet desired_state(Minute now, const std::map<scheduler::ReservationId, scheduler::Reservation>& reservations);

nlohmann::json to_json(const AccessGrant& g);
AccessGrant grant_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionKey& s);
SessionKey session_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DriverAction& a);

}  // namespace shary::broker
