#include <algorithm>
#include <tuple>

#include "shary/scheduler/scheduler.hpp"

namespace shary::scheduler {

std::optional<Minute> Scheduler::earliest_start(const std::string& resource, int unit_count, Minute duration,
                                                Minute from, Minute latest) const {
  std::vector<Minute> starts{from};
  if (const ResourceCalendar* cal = find_calendar(resource))
    for (int u = 0; u < cal->unit_count(); ++u) cal->unit(u).booking_ends(from, latest, starts);
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  for (Minute s : starts) {
    if (s < from || s > latest) continue;
    if (static_cast<int>(free_units(resource, Interval{s, s + duration}).size()) >= unit_count) return s;
  }
  return std::nullopt;
}

std::optional<Scheduler::Placement> Scheduler::first_fit(const std::string& tier, catalog::ResourceKind kind,
                                                         int unit_count, Minute duration, Minute now,
                                                         bool* any_duration_ok) const {
  std::optional<Placement> best;
  catalog::ResourceFilter filter;
  filter.kind = kind;
  for (const catalog::ResourceDescriptor& desc : catalog_.list(filter)) {
    if (desc.units < unit_count) continue;
    const policy::Policy& policy = policies_.effective(desc);
    if (duration > policy.max_duration) continue;
    if (any_duration_ok) *any_duration_ok = true;
    const policy::Tier& t = policy.tier_or_lowest(tier);
    Minute from = align_up(now);
    Minute latest = now + t.advance;
    if (best) latest = std::min(latest, best->start - 1);  // strictly earlier only: ties keep the lower id
    if (latest < from) continue;
    auto start = earliest_start(desc.id, unit_count, duration, from, latest);
    if (!start) continue;
    std::vector<int> units = free_units(desc.id, Interval{*start, *start + duration});
    units.resize(static_cast<std::size_t>(unit_count));
    best = Placement{desc.id, *start, std::move(units), &policy, &t};
  }
  return best;
}

RequestOutcome Scheduler::submit_batch(const BatchRequest& req, Minute now) {
  RequestOutcome out;
  auto reject = [&](ErrorCode code, std::string msg) {
    out.rejection = Rejection{code, std::move(msg)};
    return out;
  };
  if (req.duration <= 0 || !is_aligned(req.duration))
    return reject(ErrorCode::misaligned_interval, "batch duration must be a positive multiple of 15 minutes");
  if (req.unit_count < 1) return reject(ErrorCode::invalid_request, "unit count must be at least 1");

  catalog::ResourceFilter filter;
  filter.kind = req.kind;
  std::vector<catalog::ResourceDescriptor> matching;
  for (auto& d : catalog_.list(filter))
    if (d.units >= req.unit_count) matching.push_back(std::move(d));
  if (matching.empty())
    return reject(ErrorCode::no_matching_kind, "no active " + std::string(catalog::to_string(req.kind)) +
                                                   " resource has " + std::to_string(req.unit_count) + " unit(s)");

  bool duration_ok = false;
  auto placement = first_fit(req.tier, req.kind, req.unit_count, req.duration, now, &duration_ok);
  if (!duration_ok) return reject(ErrorCode::duration_exceeded, "duration exceeds every matching resource's cap");

  if (req.deadline && (!placement || placement->start + req.duration > *req.deadline)) {
    const catalog::ResourceDescriptor& target = placement ? catalog_.get(placement->resource) : matching.front();
    const policy::Policy& policy = policies_.effective(target);
    record_rejection(req.user, policy.tier_or_lowest(req.tier), target.id, Interval{align_up(now), *req.deadline},
                     req.unit_count, ErrorCode::deadline_infeasible, now);
    return reject(ErrorCode::deadline_infeasible, "deadline infeasible");
  }

  const policy::Policy* policy = nullptr;
  if (placement) {
    policy = placement->policy;
  } else {
    for (const auto& d : matching)
      if (req.duration <= policies_.effective(d).max_duration) {
        policy = &policies_.effective(d);
        break;
      }
  }
  const policy::Tier& tier = placement ? *placement->tier : policy->tier_or_lowest(req.tier);

  Reservation r;
  r.id = state_.next_reservation++;
  r.user = req.user;
  r.tier = tier.name;
  r.tier_rank = tier.rank;
  r.policy = policy->name;
  r.kind = req.kind;
  r.unit_count = req.unit_count;
  r.duration = req.duration;
  r.deadline = req.deadline;
  r.mode = SessionMode::batch;
  r.created_at = now;
  r.updated_at = now;
  if (placement) {
    Interval iv{placement->start, placement->start + req.duration};
    hold(r, placement->resource, placement->units, iv, now);
    r.booked = iv;
    r.state = ReservationState::confirmed;
  } else {
    r.state = ReservationState::queued;
  }
  out.reservation = state_.reservations[r.id] = std::move(r);
  return out;
}

void Scheduler::place_floating(Minute now, TickReport& report) {
  std::vector<Reservation*> queue;
  for (auto& [id, r] : state_.reservations)
    if (r.state == ReservationState::queued && r.is_floating()) queue.push_back(&r);
  std::sort(queue.begin(), queue.end(), [](const Reservation* a, const Reservation* b) {
    return std::tie(a->tier_rank, a->created_at, a->id) < std::tie(b->tier_rank, b->created_at, b->id);
  });
  for (Reservation* r : queue) {
    auto placement = first_fit(r->tier, r->kind, r->unit_count, r->duration, now, nullptr);
    if (!placement) continue;
    if (r->deadline && placement->start + r->duration > *r->deadline) continue;
    Interval iv{placement->start, placement->start + r->duration};
    hold(*r, placement->resource, placement->units, iv, now);
    r->booked = iv;
    r->policy = placement->policy->name;
    transition(*r, ReservationState::confirmed, now);
    report.placed.push_back(r->id);
    notify(r->user, NoticeKind::confirmation, "batch job placed",
           "reservation " + std::to_string(r->id) + " placed on " + placement->resource + " over " + to_string(iv),
           now);
  }
}

}  // namespace shary::scheduler
