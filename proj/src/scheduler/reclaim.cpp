#include <algorithm>

#include "shary/scheduler/scheduler.hpp"

namespace shary::scheduler {

Minute Scheduler::reservation_idle_streak(const Reservation& r, Minute now) const {
  Minute streak = -1;
  for (int u : r.units) {
    Minute s = telemetry_.idle_streak(r.resource, u, now, r.interval.start);
    streak = streak < 0 ? s : std::min(streak, s);
  }
  return std::max<Minute>(streak, 0);
}

std::vector<PreemptionAction> Scheduler::reclaim_scan(Minute now, std::size_t* dropped) {
  std::vector<PreemptionAction> actions;
  std::size_t n = std::erase_if(state_.preemptions, [&](const auto& kv) {
    const Reservation* r = find(kv.first);
    return !r || r->state != ReservationState::active;
  });
  if (dropped) *dropped += n;

  std::vector<ReservationId> to_fire;
  for (auto& [id, r] : state_.reservations) {
    if (r.state != ReservationState::active) continue;
    const catalog::ResourceDescriptor* desc = catalog_.find(r.resource);
    if (!desc) continue;
    auto pending = state_.preemptions.find(id);
    if (pending != state_.preemptions.end() && pending->second.cause == PreemptionCause::owner) {
      if (now >= pending->second.fire_at) to_fire.push_back(id);
      continue;
    }
    const policy::Policy& policy = policies_.effective(*desc);
    if (!policy.reclaim_idle_after) {
      if (pending != state_.preemptions.end()) {
        actions.push_back({id, PreemptionCause::idle, PreemptionAction::Phase::cancelled, pending->second.fire_at});
        state_.preemptions.erase(pending);
      }
      continue;
    }
    Minute streak = reservation_idle_streak(r, now);
    bool idle = streak > *policy.reclaim_idle_after;
    if (pending == state_.preemptions.end()) {
      if (!idle) continue;
      Minute fire_at = now + policy.reclaim_grace;
      state_.preemptions[id] = PendingPreemption{id, PreemptionCause::idle, now, fire_at};
      actions.push_back({id, PreemptionCause::idle, PreemptionAction::Phase::scheduled, fire_at});
      notify(r.user, NoticeKind::preemption_warning, "idle reservation will be reclaimed",
             "reservation " + std::to_string(id) + " on " + r.resource + " has been idle for " +
                 format_duration(streak) + "; it will be reclaimed at " + format_iso(fire_at) +
                 " unless activity resumes",
             now);
    } else if (!idle) {
      actions.push_back({id, PreemptionCause::idle, PreemptionAction::Phase::cancelled, pending->second.fire_at});
      state_.preemptions.erase(pending);
    } else if (now >= pending->second.fire_at) {
      to_fire.push_back(id);
    }
  }

  for (ReservationId id : to_fire) {
    const PendingPreemption p = state_.preemptions.at(id);
    if (fire_preemption(id, now, nullptr))
      actions.push_back({id, p.cause, PreemptionAction::Phase::fired, p.fire_at});
  }
  return actions;
}

std::vector<PreemptionAction> Scheduler::owner_reclaim(const std::string& resource, const Actor& actor, Minute now) {
  const catalog::ResourceDescriptor& desc = catalog_.get(resource);
  if (!actor.admin && (desc.is_shared() || actor.user != desc.owner))
    throw Error(ErrorCode::forbidden_actor, "only the owner of '" + resource + "' or an administrator may reclaim it");
  const policy::Policy& policy = policies_.effective(desc);
  if (!policy.owner_reclaim)
    throw Error(ErrorCode::owner_reclaim_denied, "policy " + policy.name + " does not allow owner reclaim");

  std::vector<PreemptionAction> actions;
  for (auto& [id, r] : state_.reservations) {
    if (r.resource != resource || r.state != ReservationState::active || r.user == desc.owner) continue;
    auto pending = state_.preemptions.find(id);
    if (pending != state_.preemptions.end() && pending->second.cause == PreemptionCause::owner) continue;
    Minute fire_at = now + policy.reclaim_grace;
    state_.preemptions[id] = PendingPreemption{id, PreemptionCause::owner, now, fire_at};
    actions.push_back({id, PreemptionCause::owner, PreemptionAction::Phase::scheduled, fire_at});
    notify(r.user, NoticeKind::preemption_warning, "owner reclaim",
           "the owner of " + resource + " is reclaiming it; reservation " + std::to_string(id) + " ends at " +
               format_iso(fire_at),
           now);
  }
  return actions;
}

bool Scheduler::fire_preemption(ReservationId id, Minute now, TickReport* report) {
  Reservation& r = mutable_get(id);
  PendingPreemption p = state_.preemptions.at(id);
  state_.preemptions.erase(id);
  if (r.state != ReservationState::active) return false;
  Minute new_end = align_up(now);
  if (new_end >= r.interval.end) return false;  // it ends at this boundary regardless

  Minute old_end = r.interval.end;
  truncate(r, new_end);
  Interval freed{r.interval.end, old_end};
  transition(r, ReservationState::preempted, now);
  settle_usage(r, now);
  economy_.compensate_preemption(r, now);
  notify(r.user, NoticeKind::preempted, "reservation preempted",
         "reservation " + std::to_string(id) + " on " + r.resource + " was reclaimed (" +
             std::string(to_string(p.cause)) + "); " + std::to_string(economy::kPreemptionCompensation) +
             " tokens credited",
         now);
  if (report) report->preempted.push_back(id);

  std::optional<OfferCandidate> first;
  const catalog::ResourceDescriptor* desc = catalog_.find(r.resource);
  if (p.cause == PreemptionCause::owner && desc && !desc->is_shared())
    first = OfferCandidate{desc->owner, "owner", 0, now, freed, static_cast<int>(r.units.size()), std::nullopt};
  capacity_freed(r.resource, freed, r.units, now, r.user, first);
  return true;
}

}  // namespace shary::scheduler
