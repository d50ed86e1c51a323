#include "shary/broker/grant.hpp"

namespace shary::broker {

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::grant: return "grant";
    case ActionKind::revoke: return "revoke";
    case ActionKind::terminate_best_effort: return "terminate_best_effort";
  }
  return "?";
}

GrantSet desired_state(Minute now, const std::map<scheduler::ReservationId, scheduler::Reservation>& reservations) {
  using scheduler::ReservationState;
  GrantSet out;
  for (const auto& [id, r] : reservations) {
    bool live = false;
    if (r.state == ReservationState::active)
      live = r.interval.end > now;
    else if (r.state == ReservationState::confirmed)
      live = r.interval.contains(now);
    if (!live) continue;
    for (int u : r.units) out.insert(AccessGrant{r.user, r.resource, u, r.interval});
  }
  return out;
}

nlohmann::json to_json(const AccessGrant& g) {
  return {{"user", g.user},
          {"resource", g.resource},
          {"unit", g.unit},
          {"start", format_iso(g.valid.start)},
          {"end", format_iso(g.valid.end)}};
}

AccessGrant grant_from_json(const nlohmann::json& j) {
  AccessGrant g;
  g.user = j.at("user").get<std::string>();
  g.resource = j.at("resource").get<std::string>();
  g.unit = j.at("unit").get<int>();
  auto s = parse_iso(j.at("start").get<std::string>());
  auto e = parse_iso(j.at("end").get<std::string>());
  if (!s || !e) throw std::invalid_argument("bad grant interval");
  g.valid = {*s, *e};
  return g;
}

nlohmann::json to_json(const SessionKey& s) { return {{"user", s.user}, {"resource", s.resource}, {"unit", s.unit}}; }

SessionKey session_from_json(const nlohmann::json& j) {
  return {j.at("user").get<std::string>(), j.at("resource").get<std::string>(), j.at("unit").get<int>()};
}

nlohmann::json to_json(const DriverAction& a) {
  nlohmann::json j = to_json(a.target);
  j["kind"] = to_string(a.kind);
  if (a.kind == ActionKind::terminate_best_effort) {
    j.erase("start");
    j.erase("end");
  }
  j["reason"] = a.reason;
  return j;
}

}  // namespace shary::broker
