#include <algorithm>
#include <set>
#include <tuple>

#include "shary/scheduler/scheduler.hpp"

namespace shary::scheduler {

std::vector<OfferCandidate> Scheduler::offer_candidates(const std::string& resource, Interval window,
                                                        const std::string& exclude_user) const {
  std::vector<OfferCandidate> all;
  for (const auto& [id, r] : state_.reservations)
    if (r.state == ReservationState::queued && r.resource == resource && r.interval.overlaps(window))
      all.push_back(OfferCandidate{r.user, r.tier, r.tier_rank, r.created_at, r.interval, r.unit_count, r.id});
  for (const RejectedRequest& x : state_.rejections)
    if (x.resource == resource && x.interval.overlaps(window))
      all.push_back(OfferCandidate{x.user, x.tier, x.tier_rank, x.created_at, x.interval, x.unit_count, std::nullopt});
  std::stable_sort(all.begin(), all.end(), [](const OfferCandidate& a, const OfferCandidate& b) {
    return std::tie(a.tier_rank, a.created_at, a.user) < std::tie(b.tier_rank, b.created_at, b.user);
  });
  std::vector<OfferCandidate> out;
  std::set<std::string> seen;
  for (OfferCandidate& c : all) {
    if (c.user == exclude_user || !seen.insert(c.user).second) continue;
    out.push_back(std::move(c));
  }
  return out;
}

bool Scheduler::issue_next_offer(LastMinuteOffer proto, Minute now, std::vector<LastMinuteOffer>* issued) {
  Interval window{std::max(proto.freed.start, align_up(now)), proto.freed.end};
  while (!proto.remaining.empty()) {
    OfferCandidate c = std::move(proto.remaining.front());
    proto.remaining.erase(proto.remaining.begin());
    if (c.source) {
      const Reservation* src = find(*c.source);
      if (!src || src->state != ReservationState::queued) continue;
    }
    Interval clip = c.want.intersect(window);
    if (clip.empty() || clip.start - now > config_.offer_horizon) continue;
    std::vector<int> free;
    const ResourceCalendar* cal = find_calendar(proto.resource);
    for (int u : proto.freed_units)
      if (!cal || cal->unit(u).is_free(clip)) free.push_back(u);
    if (free.empty()) continue;
    if (static_cast<int>(free.size()) > c.unit_count) free.resize(static_cast<std::size_t>(c.unit_count));

    LastMinuteOffer o = proto;
    o.id = state_.next_offer++;
    o.window = clip;
    o.units = std::move(free);
    o.candidate = std::move(c);
    o.issued_at = now;
    o.ttl = config_.offer_ttl;
    o.state = OfferState::open;
    o.accepted_reservation.reset();
    notify(o.candidate.user, NoticeKind::offer, "last-minute availability",
           "offer " + std::to_string(o.id) + ": " + std::to_string(o.units.size()) + " unit(s) of " + o.resource +
               " over " + to_string(o.window) + ", expires " + format_iso(now + o.ttl),
           now);
    if (issued) issued->push_back(o);
    state_.offers[o.id] = std::move(o);
    return true;
  }
  return false;
}

std::vector<LastMinuteOffer> Scheduler::generate_offers(Interval freed, const std::string& resource,
                                                        std::vector<int> units, Minute now,
                                                        const std::string& exclude_user,
                                                        const std::optional<OfferCandidate>& first) {
  std::vector<LastMinuteOffer> issued;
  Interval window{std::max(freed.start, align_up(now)), freed.end};
  if (window.empty() || window.start - now > config_.offer_horizon || units.empty()) return issued;
  const catalog::ResourceDescriptor* desc = catalog_.find(resource);
  if (!desc || desc->retired) return issued;

  LastMinuteOffer proto;
  proto.chain = state_.next_chain;
  proto.resource = resource;
  proto.freed = window;
  std::sort(units.begin(), units.end());
  proto.freed_units = std::move(units);
  if (first) proto.remaining.push_back(*first);
  for (OfferCandidate& c : offer_candidates(resource, window, exclude_user))
    if (!first || c.user != first->user) proto.remaining.push_back(std::move(c));
  if (proto.remaining.empty()) return issued;
  if (issue_next_offer(std::move(proto), now, &issued)) ++state_.next_chain;
  return issued;
}

Reservation Scheduler::accept_offer(OfferId id, const Actor& actor, Minute now) {
  auto it = state_.offers.find(id);
  if (it == state_.offers.end()) throw Error(ErrorCode::unknown_offer, "unknown offer " + std::to_string(id));
  LastMinuteOffer& o = it->second;
  if (actor.user != o.candidate.user)
    throw Error(ErrorCode::forbidden_actor, "offer " + std::to_string(id) + " was made to another user");
  if (o.state != OfferState::open || now >= o.issued_at + o.ttl)
    throw Error(ErrorCode::offer_unavailable, "offer " + std::to_string(id) + " is no longer open");
  const catalog::ResourceDescriptor* desc = catalog_.find(o.resource);
  if (!desc || desc->retired || o.window.end <= now)
    throw Error(ErrorCode::offer_unavailable, "offer " + std::to_string(id) + " is no longer open");
  const ResourceCalendar* cal = find_calendar(o.resource);
  for (int u : o.units)
    if (cal && !cal->unit(u).is_free(o.window))
      throw Error(ErrorCode::offer_unavailable, "the offered capacity was taken");

  Interval take{std::max(o.window.start, align_down(now)), o.window.end};
  Reservation r;
  r.id = state_.next_reservation++;
  r.user = o.candidate.user;
  r.tier = o.candidate.tier;
  r.tier_rank = o.candidate.tier_rank;
  r.policy = policies_.effective(*desc).name;
  r.kind = desc->kind;
  r.duration = take.length();
  r.booked = take;
  r.created_at = now;
  r.updated_at = now;
  if (o.candidate.source)
    if (const Reservation* src = find(*o.candidate.source)) r.mode = src->mode;
  hold(r, o.resource, o.units, take, now);
  r.state = ReservationState::confirmed;
  ReservationId rid_ = r.id;
  state_.reservations[rid_] = std::move(r);

  o.state = OfferState::accepted;
  o.accepted_reservation = rid_;
  LastMinuteOffer next = o;
  const OfferCandidate taker = o.candidate;

  if (taker.source) {
    Reservation& src = mutable_get(*taker.source);
    if (src.state == ReservationState::queued) {
      transition(src, ReservationState::cancelled, now);
      if (src.auction) economy_.withdraw_bid(*src.auction, src.user);
      notify(src.user, NoticeKind::cancellation, "request superseded",
             "reservation " + std::to_string(src.id) + " replaced by reservation " + std::to_string(rid_) +
                 " from offer " + std::to_string(id),
             now);
    }
  } else {
    std::erase_if(state_.rejections, [&](const RejectedRequest& x) {
      return x.user == taker.user && x.resource == next.resource && x.interval == taker.want &&
             x.created_at == taker.created_at;
    });
  }
  // Whatever the taker left unused in the freed window goes to the rest of the chain.
  issue_next_offer(std::move(next), now, nullptr);
  return state_.reservations.at(rid_);
}

void Scheduler::decline_offer(OfferId id, const Actor& actor, Minute now) {
  auto it = state_.offers.find(id);
  if (it == state_.offers.end()) throw Error(ErrorCode::unknown_offer, "unknown offer " + std::to_string(id));
  LastMinuteOffer& o = it->second;
  if (actor.user != o.candidate.user)
    throw Error(ErrorCode::forbidden_actor, "offer " + std::to_string(id) + " was made to another user");
  if (o.state != OfferState::open)
    throw Error(ErrorCode::offer_unavailable, "offer " + std::to_string(id) + " is no longer open");
  o.state = OfferState::expired;
  issue_next_offer(o, now, nullptr);
}

void Scheduler::expire_offers(Minute now, TickReport& report) {
  std::vector<OfferId> lapsed;
  for (auto& [id, o] : state_.offers)
    if (o.state == OfferState::open && (now >= o.issued_at + o.ttl || o.window.end <= now)) lapsed.push_back(id);
  for (OfferId id : lapsed) {
    LastMinuteOffer& o = state_.offers.at(id);
    o.state = OfferState::expired;
    report.offers_expired.push_back(id);
    std::vector<LastMinuteOffer> issued;
    issue_next_offer(o, now, &issued);
    for (const auto& n : issued) report.offers_issued.push_back(n.id);
  }
}

void Scheduler::supersede_offers(Minute now, TickReport& report) {
  std::vector<OfferId> stale;
  for (auto& [id, o] : state_.offers) {
    if (o.state != OfferState::open) continue;
    const catalog::ResourceDescriptor* desc = catalog_.find(o.resource);
    bool gone = !desc || desc->retired;
    const ResourceCalendar* cal = find_calendar(o.resource);
    for (int u : o.units)
      if (cal && !cal->unit(u).is_free(o.window)) gone = true;
    if (!gone && o.candidate.source) {
      const Reservation* src = find(*o.candidate.source);
      gone = !src || src->state != ReservationState::queued;
    }
    if (gone) stale.push_back(id);
  }
  for (OfferId id : stale) {
    LastMinuteOffer& o = state_.offers.at(id);
    o.state = OfferState::superseded;
    report.offers_superseded.push_back(id);
    std::vector<LastMinuteOffer> issued;
    issue_next_offer(o, now, &issued);
    for (const auto& n : issued) report.offers_issued.push_back(n.id);
  }
}

}  // namespace shary::scheduler
