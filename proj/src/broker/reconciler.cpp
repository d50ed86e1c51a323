#include "shary/broker/reconciler.hpp"

#include <algorithm>

namespace shary::broker {

namespace {

std::set<SessionKey> covered(const GrantSet& grants) {
  std::set<SessionKey> out;
  for (const AccessGrant& g : grants) out.insert(session_of(g));
  return out;
}

}  // namespace

std::vector<DriverAction> Reconciler::plan(const GrantSet& desired, const DriverSnapshot& observed,
                                           Minute now) const {
  std::vector<DriverAction> actions;
  for (const AccessGrant& g : desired)
    if (!observed.grants.count(g)) actions.push_back({ActionKind::grant, g, "reservation"});
  for (const AccessGrant& g : observed.grants)
    if (!desired.count(g)) actions.push_back({ActionKind::revoke, g, "no covering reservation"});

  std::set<SessionKey> keep = covered(desired);
  for (const SessionKey& s : observed.sessions) {
    if (keep.count(s)) continue;
    auto it = revoked_at_.find(s);
    if (it == revoked_at_.end() || now - it->second < grace_) continue;
    actions.push_back({ActionKind::terminate_best_effort, AccessGrant{s.user, s.resource, s.unit, {}},
                       "grant revoked at " + format_iso(it->second)});
  }
  return actions;
}

void Reconciler::commit(const GrantSet& desired, const DriverSnapshot& observed,
                        const std::vector<DriverAction>& applied, Minute now) {
  std::set<SessionKey> keep = covered(desired);
  std::set<SessionKey> terminated;
  for (const DriverAction& a : applied)
    if (a.kind == ActionKind::terminate_best_effort) terminated.insert(session_of(a.target));
  std::erase_if(revoked_at_, [&](const auto& kv) {
    return keep.count(kv.first) || terminated.count(kv.first) || !observed.sessions.count(kv.first);
  });
  // A session without a desired grant starts its grace the first pass it is seen uncovered: right after its
  // revoke, or on discovery for sessions that never had a grant.
  for (const SessionKey& s : observed.sessions)
    if (!keep.count(s) && !terminated.count(s)) revoked_at_.try_emplace(s, now);
}

}  // namespace shary::broker
