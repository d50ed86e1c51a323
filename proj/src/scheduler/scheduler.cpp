#include "shary/scheduler/scheduler.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace shary::scheduler {

namespace {

std::string rid(ReservationId id) { return "reservation " + std::to_string(id); }

}  // namespace

std::string_view to_string(NoticeKind k) {
  switch (k) {
    case NoticeKind::offer: return "offer";
    case NoticeKind::preemption_warning: return "preemption-warning";
    case NoticeKind::preempted: return "preempted";
    case NoticeKind::cancellation: return "cancellation";
    case NoticeKind::auction_result: return "auction-result";
    case NoticeKind::confirmation: return "confirmation";
    case NoticeKind::expiry: return "expiry";
  }
  return "?";
}

std::optional<NoticeKind> parse_notice_kind(std::string_view text) {
  for (auto k : {NoticeKind::offer, NoticeKind::preemption_warning, NoticeKind::preempted, NoticeKind::cancellation,
                 NoticeKind::auction_result, NoticeKind::confirmation, NoticeKind::expiry})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::string_view to_string(OfferState s) {
  switch (s) {
    case OfferState::open: return "open";
    case OfferState::accepted: return "accepted";
    case OfferState::expired: return "expired";
    case OfferState::superseded: return "superseded";
  }
  return "?";
}

std::optional<OfferState> parse_offer_state(std::string_view text) {
  for (auto s : {OfferState::open, OfferState::accepted, OfferState::expired, OfferState::superseded})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

std::string_view to_string(PreemptionCause c) { return c == PreemptionCause::idle ? "idle" : "owner"; }

std::string_view to_string(PreemptionAction::Phase p) {
  switch (p) {
    case PreemptionAction::Phase::scheduled: return "scheduled";
    case PreemptionAction::Phase::fired: return "fired";
    case PreemptionAction::Phase::cancelled: return "cancelled";
  }
  return "?";
}

bool TickReport::empty() const {
  return activated.empty() && completed.empty() && expired.empty() && promoted.empty() && preempted.empty() &&
         placed.empty() && offers_issued.empty() && offers_expired.empty() && offers_superseded.empty() &&
         auctions_settled.empty() && auctions_voided.empty() && reclaim.empty() && housekeeping == 0;
}

Scheduler::Scheduler(SchedulerConfig config, const catalog::Catalog& catalog, const policy::PolicySet& policies,
                     economy::Economy& economy, const telemetry::Telemetry& telemetry, Notifier& notifier)
    : config_(config),
      catalog_(catalog),
      policies_(policies),
      economy_(economy),
      telemetry_(telemetry),
      notifier_(notifier) {}

// ---------------------------------------------------------------------------------------------------------------
// bookkeeping

const Reservation* Scheduler::find(ReservationId id) const {
  auto it = state_.reservations.find(id);
  return it == state_.reservations.end() ? nullptr : &it->second;
}

const Reservation& Scheduler::get(ReservationId id) const {
  const Reservation* r = find(id);
  if (!r) throw Error(ErrorCode::unknown_id, "unknown " + rid(id));
  return *r;
}

Reservation& Scheduler::mutable_get(ReservationId id) { return const_cast<Reservation&>(get(id)); }

ResourceCalendar& Scheduler::calendar(const std::string& resource) {
  auto it = calendars_.find(resource);
  if (it == calendars_.end()) it = calendars_.emplace(resource, ResourceCalendar(catalog_.get(resource).units)).first;
  return it->second;
}

const ResourceCalendar* Scheduler::find_calendar(const std::string& resource) const {
  auto it = calendars_.find(resource);
  return it == calendars_.end() ? nullptr : &it->second;
}

std::vector<int> Scheduler::free_units(const std::string& resource, Interval iv) const {
  if (const ResourceCalendar* cal = find_calendar(resource)) return cal->free_units(iv);
  std::vector<int> all(static_cast<std::size_t>(catalog_.get(resource).units));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return all;
}

void Scheduler::notify(const std::string& user, NoticeKind kind, std::string subject, std::string body, Minute now) {
  notifier_.notify(Notice{user, kind, std::move(subject), std::move(body)}, now);
}

void Scheduler::transition(Reservation& r, ReservationState to, Minute now) {
  if (!can_transition(r.state, to))
    throw Error(ErrorCode::invalid_state, rid(r.id) + " cannot go from " + std::string(to_string(r.state)) + " to " +
                                              std::string(to_string(to)));
  r.state = to;
  r.updated_at = now;
}

void Scheduler::hold(Reservation& r, const std::string& resource, std::vector<int> units, Interval iv, Minute now) {
  ResourceCalendar& cal = calendar(resource);
  std::size_t done = 0;
  try {
    for (; done < units.size(); ++done) cal.unit(units[done]).insert(iv, r.id);
  } catch (...) {
    for (std::size_t i = 0; i < done; ++i) cal.unit(units[i]).erase(iv, r.id);
    throw;
  }
  r.resource = resource;
  r.units = std::move(units);
  r.interval = iv;
  r.unit_count = static_cast<int>(r.units.size());
  if (r.state == ReservationState::queued) r.booked = iv;
}

void Scheduler::unhold(Reservation& r) {
  if (r.resource.empty()) return;
  ResourceCalendar& cal = calendar(r.resource);
  for (int u : r.units) cal.unit(u).erase(r.interval, r.id);
}

void Scheduler::truncate(Reservation& r, Minute new_end) {
  // The reservation leaves the calendar: only confirmed/active bookings are indexed.
  unhold(r);
  r.interval.end = std::max(r.interval.start, std::min(new_end, r.interval.end));
}

void Scheduler::settle_usage(Reservation& r, Minute now) {
  Minute reserved = r.interval.length() * static_cast<Minute>(r.units.size());
  if (reserved <= 0) return;
  Minute busy = 0;
  for (int u : r.units) busy += telemetry_.measure(r.resource, u, r.interval).busy();
  economy_.accrue_usage(r, reserved, busy, now);
}

int Scheduler::holding_count(const std::string& user, const std::string& policy_name) const {
  int n = 0;
  for (const auto& [id, r] : state_.reservations)
    if (r.user == user && r.policy == policy_name && r.holds_capacity()) ++n;
  return n;
}

void Scheduler::record_rejection(const std::string& user, const policy::Tier& tier, const std::string& resource,
                                 Interval iv, int unit_count, ErrorCode reason, Minute now) {
  if (iv.empty()) return;
  state_.rejections.push_back(RejectedRequest{user, tier.name, tier.rank, resource, iv, unit_count, now, reason});
}

void Scheduler::restore(SchedulerState state) {
  state_ = std::move(state);
  calendars_.clear();
  for (const auto& [id, r] : state_.reservations) {
    if (!r.holds_capacity() || r.resource.empty()) continue;
    ResourceCalendar& cal = calendar(r.resource);
    for (int u : r.units) cal.unit(u).insert(r.interval, r.id);
  }
}

// ---------------------------------------------------------------------------------------------------------------
// admission

std::optional<Rejection> Scheduler::admission_checks(const catalog::ResourceDescriptor& desc,
                                                     const policy::Policy& policy, const policy::Tier& tier,
                                                     const std::string& user, int unit_count, Interval iv,
                                                     Minute now) const {
  if (iv.length() > policy.max_duration)
    return Rejection{ErrorCode::duration_exceeded, "duration " + format_duration(iv.length()) + " exceeds " +
                                                       format_duration(policy.max_duration)};
  auto advance = policy::check_advance(policy, tier.name, now, iv.start);
  if (!advance.allowed) return Rejection{ErrorCode::advance_denied, advance.reason};
  if (policy.max_active && holding_count(user, policy.name) >= *policy.max_active)
    return Rejection{ErrorCode::max_active_exceeded,
                     "user holds " + std::to_string(*policy.max_active) + " reservations under " + policy.name};
  return std::nullopt;
}

RequestOutcome Scheduler::request_reservation(const ReservationRequest& req, Minute now) {
  RequestOutcome out;
  auto reject = [&](ErrorCode code, std::string msg) {
    out.rejection = Rejection{code, std::move(msg)};
    return out;
  };
  const catalog::ResourceDescriptor* desc = catalog_.find(req.resource);
  if (!desc) return reject(ErrorCode::unknown_resource, "unknown resource '" + req.resource + "'");
  if (desc->retired) return reject(ErrorCode::retired_resource, "resource '" + req.resource + "' is retired");
  if (req.interval.empty() || !req.interval.aligned())
    return reject(ErrorCode::misaligned_interval,
                  "interval " + to_string(req.interval) + " is not a non-empty multiple of 15 minutes");
  if (req.interval.start < now) return reject(ErrorCode::interval_in_past, "interval starts in the past");
  if (req.unit_count < 1) return reject(ErrorCode::invalid_request, "unit count must be at least 1");
  if (req.unit_count > desc->units) return reject(ErrorCode::capacity_exceeded, "units exceed capacity");

  const policy::Policy& policy = policies_.effective(*desc);
  const policy::Tier& tier = policy.tier_or_lowest(req.tier);
  if (auto why = admission_checks(*desc, policy, tier, req.user, req.unit_count, req.interval, now)) {
    if (why->code != ErrorCode::duration_exceeded)
      record_rejection(req.user, tier, req.resource, req.interval, req.unit_count, why->code, now);
    out.rejection = std::move(why);
    return out;
  }

  Reservation r;
  r.id = state_.next_reservation++;
  r.user = req.user;
  r.tier = tier.name;
  r.tier_rank = tier.rank;
  r.policy = policy.name;
  r.resource = req.resource;
  r.kind = desc->kind;
  r.unit_count = req.unit_count;
  r.interval = req.interval;
  r.booked = req.interval;
  r.duration = req.interval.length();
  r.mode = req.mode;
  r.created_at = now;
  r.updated_at = now;

  std::vector<int> free = free_units(req.resource, req.interval);
  if (static_cast<int>(free.size()) >= req.unit_count) {
    free.resize(static_cast<std::size_t>(req.unit_count));
    hold(r, req.resource, std::move(free), req.interval, now);
    r.state = ReservationState::confirmed;
    auto& stored = state_.reservations[r.id] = std::move(r);
    out.reservation = stored;
    return out;
  }

  r.state = ReservationState::queued;
  if (policy.contention == policy::ContentionMode::auction) {
    const economy::Auction* a = economy_.find_open_auction(req.resource, req.interval);
    economy::AuctionId aid = a ? a->id
                               : economy_.open_auction(req.resource, req.interval, req.unit_count,
                                                       std::min(now + policy.auction_deadline, req.interval.start),
                                                       now);
    r.auction = aid;
  }
  ReservationId id = r.id;
  state_.reservations[id] = std::move(r);
  Reservation& stored = state_.reservations[id];
  if (stored.auction && req.bid) {
    try {
      economy_.place_bid(*stored.auction, stored.user, *req.bid, now);
      stored.bid = *req.bid;
    } catch (const Error& e) {
      out.bid_rejection = Rejection{e.code(), e.what()};
    }
  }
  out.reservation = stored;
  return out;
}

RequestOutcome Scheduler::force_reservation(const std::string& user, const std::string& resource,
                                            std::vector<int> units, Interval interval, Minute now) {
  RequestOutcome out;
  auto reject = [&](ErrorCode code, std::string msg) {
    out.rejection = Rejection{code, std::move(msg)};
    return out;
  };
  const catalog::ResourceDescriptor* desc = catalog_.find(resource);
  if (!desc) return reject(ErrorCode::unknown_resource, "unknown resource '" + resource + "'");
  if (desc->retired) return reject(ErrorCode::retired_resource, "resource '" + resource + "' is retired");
  if (interval.empty() || !interval.aligned())
    return reject(ErrorCode::misaligned_interval, "interval " + to_string(interval) + " is not aligned");
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  if (units.empty() || units.front() < 0 || units.back() >= desc->units)
    return reject(ErrorCode::invalid_request, "unit indices must lie in [0, " + std::to_string(desc->units) + ")");
  ResourceCalendar& cal = calendar(resource);
  for (int u : units)
    if (!cal.unit(u).is_free(interval))
      return reject(ErrorCode::overlap, "unit " + std::to_string(u) + " is already booked over " + to_string(interval));

  const policy::Policy& policy = policies_.effective(*desc);
  const policy::Tier& tier = policy.tier_or_lowest("");
  Reservation r;
  r.id = state_.next_reservation++;
  r.user = user;
  r.tier = tier.name;
  r.tier_rank = tier.rank;
  r.policy = policy.name;
  r.kind = desc->kind;
  r.duration = interval.length();
  r.booked = interval;
  r.created_at = now;
  r.updated_at = now;
  hold(r, resource, std::move(units), interval, now);
  r.state = ReservationState::confirmed;
  out.warnings.push_back("policy-bypass: " + rid(r.id) + " stored without policy checks");
  out.reservation = state_.reservations[r.id] = std::move(r);
  return out;
}

// ---------------------------------------------------------------------------------------------------------------
// queries

std::vector<Reservation> Scheduler::find_conflicts(const std::string& resource, Interval iv) const {
  catalog_.get(resource);
  std::vector<Reservation> out;
  const ResourceCalendar* cal = find_calendar(resource);
  if (!cal) return out;
  std::set<ReservationId> ids;
  for (int u = 0; u < cal->unit_count(); ++u)
    for (ReservationId id : cal->unit(u).overlapping(iv)) ids.insert(id);
  for (ReservationId id : ids) out.push_back(get(id));
  return out;
}

std::vector<std::vector<Interval>> Scheduler::availability(const std::string& resource, Interval window) const {
  const catalog::ResourceDescriptor& desc = catalog_.get(resource);
  std::vector<std::vector<Interval>> out(static_cast<std::size_t>(desc.units));
  const ResourceCalendar* cal = find_calendar(resource);
  for (int u = 0; u < desc.units; ++u) {
    auto& slot = out[static_cast<std::size_t>(u)];
    if (cal)
      slot = cal->unit(u).free_within(window);
    else if (!window.empty())
      slot.push_back(window);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------------------------
// lifecycle

void Scheduler::capacity_freed(const std::string& resource, Interval freed, const std::vector<int>& units, Minute now,
                               const std::string& exclude_user, const std::optional<OfferCandidate>& first) {
  if (!config_.dynamic_reallocation || freed.empty() || units.empty()) return;
  promote_queued(resource, now);
  generate_offers(freed, resource, units, now, exclude_user, first);
}

void Scheduler::cancel_reservation(ReservationId id, const Actor& actor, Minute now) {
  Reservation& r = mutable_get(id);
  if (!actor.admin && actor.user != r.user)
    throw Error(ErrorCode::forbidden_actor, "only the owner or an administrator may cancel " + rid(id));
  if (r.state != ReservationState::queued && r.state != ReservationState::confirmed)
    throw Error(ErrorCode::invalid_state,
                rid(id) + " is " + std::string(to_string(r.state)) +
                    (r.state == ReservationState::active ? "; use release" : ""));
  bool held = r.holds_capacity();
  if (held) unhold(r);
  transition(r, ReservationState::cancelled, now);
  if (r.auction) economy_.withdraw_bid(*r.auction, r.user);
  notify(r.user, NoticeKind::cancellation, "reservation cancelled",
         rid(id) + (r.resource.empty() ? std::string() : " on " + r.resource) + " was cancelled", now);
  if (held) {
    Interval freed{std::max(r.interval.start, align_up(now)), r.interval.end};
    capacity_freed(r.resource, freed, r.units, now, r.user);
  }
}

Interval Scheduler::release_early(ReservationId id, Minute at, const Actor& actor, Minute now) {
  Reservation& r = mutable_get(id);
  if (!actor.admin && actor.user != r.user)
    throw Error(ErrorCode::forbidden_actor, "only the owner or an administrator may release " + rid(id));
  if (r.state != ReservationState::active)
    throw Error(ErrorCode::invalid_state, rid(id) + " is " + std::string(to_string(r.state)) + ", not active");
  if (!r.interval.contains(at))
    throw Error(ErrorCode::at_outside_interval,
                "release time " + format_iso(at) + " is outside " + to_string(r.interval));
  if (at > now) throw Error(ErrorCode::invalid_request, "release time " + format_iso(at) + " is in the future");

  Minute old_end = r.interval.end;
  Minute new_end = align_up(at);
  truncate(r, new_end);
  Interval freed{r.interval.end, old_end};
  transition(r, ReservationState::released, now);
  settle_usage(r, now);
  economy_.early_release_bonus(r, freed.length(), r.booked.length(), now);
  capacity_freed(r.resource, freed, r.units, now, r.user);
  return freed;
}

std::vector<ReservationId> Scheduler::promote_queued(const std::string& resource, Minute now) {
  std::vector<ReservationId> promoted;
  const catalog::ResourceDescriptor* desc = catalog_.find(resource);
  if (!desc || desc->retired) return promoted;
  std::vector<Reservation*> queue;
  for (auto& [id, r] : state_.reservations)
    if (r.state == ReservationState::queued && r.resource == resource) queue.push_back(&r);
  std::sort(queue.begin(), queue.end(), [](const Reservation* a, const Reservation* b) {
    return std::tie(a->tier_rank, a->created_at, a->id) < std::tie(b->tier_rank, b->created_at, b->id);
  });
  for (Reservation* r : queue) {
    if (r->interval.start < now) {
      transition(*r, ReservationState::expired, now);
      if (r->auction) economy_.withdraw_bid(*r->auction, r->user);
      notify(r->user, NoticeKind::expiry, "request expired", rid(r->id) + " was never confirmed before its start",
             now);
      continue;
    }
    if (r->auction) {
      const economy::Auction* a = economy_.find_auction(*r->auction);
      if (a && a->state == economy::AuctionState::open) continue;
    }
    std::vector<int> free = free_units(resource, r->interval);
    if (static_cast<int>(free.size()) < r->unit_count) continue;
    free.resize(static_cast<std::size_t>(r->unit_count));
    hold(*r, resource, std::move(free), r->interval, now);
    transition(*r, ReservationState::confirmed, now);
    promoted.push_back(r->id);
    notify(r->user, NoticeKind::confirmation, "request confirmed",
           rid(r->id) + " on " + resource + " confirmed for " + to_string(r->interval), now);
  }
  return promoted;
}

// ---------------------------------------------------------------------------------------------------------------
// auctions

void Scheduler::place_bid(economy::AuctionId id, const std::string& user, economy::Tokens amount, Minute now) {
  if (!economy_.find_auction(id)) throw Error(ErrorCode::unknown_auction, "unknown auction " + std::to_string(id));
  std::vector<Reservation*> mine;
  for (auto& [rid_, r] : state_.reservations)
    if (r.state == ReservationState::queued && r.auction == id && r.user == user) mine.push_back(&r);
  if (mine.empty())
    throw Error(ErrorCode::no_queued_request, "user '" + user + "' has no queued request in auction " +
                                                  std::to_string(id));
  economy_.place_bid(id, user, amount, now);
  for (Reservation* r : mine) r->bid = amount;
}

std::optional<economy::Bid> Scheduler::settle_auction(economy::AuctionId id, Minute now) {
  const economy::Auction* a = economy_.find_auction(id);
  if (!a) throw Error(ErrorCode::unknown_auction, "unknown auction " + std::to_string(id));
  std::string resource = a->resource;
  std::vector<economy::Bid> bids = a->bids;

  std::map<std::string, ReservationId> backing;
  for (auto& [rid_, r] : state_.reservations) {
    if (r.state != ReservationState::queued || r.auction != id || r.interval.start < now) continue;
    if (backing.count(r.user)) continue;
    if (static_cast<int>(free_units(r.resource, r.interval).size()) >= r.unit_count) backing[r.user] = r.id;
  }
  auto winner = economy_.settle_auction(id, now, [&](const economy::Bid& b) { return backing.count(b.user) != 0; });
  if (winner) {
    Reservation& r = mutable_get(backing.at(winner->user));
    std::vector<int> free = free_units(r.resource, r.interval);
    free.resize(static_cast<std::size_t>(r.unit_count));
    hold(r, r.resource, std::move(free), r.interval, now);
    transition(r, ReservationState::confirmed, now);
    r.bid = winner->amount;
  }
  for (const economy::Bid& b : bids) {
    bool won = winner && winner->user == b.user;
    notify(b.user, NoticeKind::auction_result, won ? "auction won" : "auction lost",
           "auction " + std::to_string(id) + " on " + resource +
               (won ? ": won at " + std::to_string(b.amount) + " tokens" : ": not awarded"),
           now);
  }
  promote_queued(resource, now);
  return winner;
}

std::vector<economy::AuctionId> Scheduler::due_auctions(Minute now) const {
  std::vector<economy::AuctionId> out;
  for (const auto& [id, a] : economy_.auctions())
    if (a.state == economy::AuctionState::open && a.deadline <= now) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------------------------------------------
// decommission

std::vector<ReservationId> Scheduler::on_decommission(const std::string& resource, Minute now) {
  std::vector<ReservationId> cancelled;
  for (auto& [id, r] : state_.reservations) {
    if (r.resource != resource) continue;
    if (r.state != ReservationState::confirmed && r.state != ReservationState::queued) continue;
    if (r.holds_capacity()) unhold(r);
    transition(r, ReservationState::cancelled, now);
    cancelled.push_back(id);
    notify(r.user, NoticeKind::cancellation, "reservation cancelled",
           rid(id) + " on " + resource + " was cancelled because the resource was decommissioned", now);
  }
  for (const auto& [aid, a] : economy_.auctions()) {
    if (a.resource != resource || a.state != economy::AuctionState::open) continue;
    for (const economy::Bid& b : a.bids)
      notify(b.user, NoticeKind::auction_result, "auction void",
             "auction " + std::to_string(aid) + " on " + resource + " was voided", now);
    economy_.void_auction(aid);
  }
  for (auto& [oid, o] : state_.offers)
    if (o.resource == resource && o.state == OfferState::open) o.state = OfferState::superseded;
  std::erase_if(state_.rejections, [&](const RejectedRequest& x) { return x.resource == resource; });
  return cancelled;
}

// ---------------------------------------------------------------------------------------------------------------
// tick

TickReport Scheduler::tick(Minute now) {
  TickReport report;
  for (economy::AuctionId id : due_auctions(now)) {
    if (settle_auction(id, now))
      report.auctions_settled.push_back(id);
    else
      report.auctions_voided.push_back(id);
  }

  for (auto& [id, r] : state_.reservations) {
    if (r.state == ReservationState::confirmed && r.interval.start <= now) {
      transition(r, ReservationState::active, now);
      report.activated.push_back(id);
    }
    if (r.state == ReservationState::active && r.interval.end <= now) {
      transition(r, ReservationState::completed, now);
      unhold(r);
      settle_usage(r, now);
      report.completed.push_back(id);
      state_.preemptions.erase(id);
    }
    if (r.state != ReservationState::queued) continue;
    bool lapsed = r.is_floating() ? (r.deadline && align_up(now) + r.duration > *r.deadline) : r.interval.start < now;
    if (lapsed) {
      transition(r, ReservationState::expired, now);
      if (r.auction) economy_.withdraw_bid(*r.auction, r.user);
      notify(r.user, NoticeKind::expiry, "request expired",
             rid(id) + (r.is_floating() ? " can no longer meet its deadline" : " was never confirmed before its start"),
             now);
      report.expired.push_back(id);
    }
  }
  report.housekeeping +=
      std::erase_if(state_.rejections, [&](const RejectedRequest& x) { return x.interval.end <= now; });

  report.reclaim = reclaim_scan(now, &report.housekeeping);
  for (const PreemptionAction& a : report.reclaim)
    if (a.phase == PreemptionAction::Phase::fired) report.preempted.push_back(a.reservation);

  expire_offers(now, report);
  place_floating(now, report);
  supersede_offers(now, report);
  return report;
}

}  // namespace shary::scheduler
