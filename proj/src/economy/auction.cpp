#include <algorithm>

#include "shary/economy/economy.hpp"
#include "shary/error.hpp"

namespace shary::economy {
namespace {

std::string reservation_ref(scheduler::ReservationId id) { return "reservation:" + std::to_string(id); }

}  // namespace

bool outranks(const Bid& a, const Bid& b) {
  if (a.amount != b.amount) return a.amount > b.amount;
  if (a.placed_at != b.placed_at) return a.placed_at < b.placed_at;
  return a.user < b.user;
}

std::vector<Bid> rank_bids(std::vector<Bid> bids) {
  std::sort(bids.begin(), bids.end(), outranks);
  return bids;
}

std::string_view to_string(AuctionState s) {
  switch (s) {
    case AuctionState::open: return "open";
    case AuctionState::settled: return "settled";
    case AuctionState::void_: return "void";
  }
  return "open";
}

std::optional<AuctionState> parse_auction_state(std::string_view t) {
  if (t == "open") return AuctionState::open;
  if (t == "settled") return AuctionState::settled;
  if (t == "void") return AuctionState::void_;
  return std::nullopt;
}

const Bid* Auction::bid_of(const std::string& user) const {
  for (const auto& b : bids)
    if (b.user == user) return &b;
  return nullptr;
}

void Economy::open_account(const std::string& user, Minute now) {
  if (ledger_.has_account(user)) return;
  ledger_.open_account(user);
  ledger_.append({now, user, kInitialGrant, EntryReason::grant, "initial"});
}

void Economy::grant(const std::string& user, Tokens amount, Minute now, std::string ref) {
  if (amount == 0) throw Error(ErrorCode::invalid_request, "grant amount must be non-zero");
  ledger_.append({now, user, amount, EntryReason::grant, std::move(ref)});
}

Tokens Economy::accrue_usage(const scheduler::Reservation& r, Minute reserved, Minute busy, Minute now) {
  if (accrued_.count(r.id))
    throw Error(ErrorCode::already_accrued, "usage already accrued for reservation " + std::to_string(r.id));
  const Tokens delta = accrual_delta(reserved, busy);
  accrued_.insert(r.id);
  ledger_.append({now, r.user, delta, busy == 0 ? EntryReason::no_show_penalty : EntryReason::accrual,
                  reservation_ref(r.id)});
  return delta;
}

Tokens Economy::early_release_bonus(const scheduler::Reservation& r, Minute freed, Minute reserved, Minute now) {
  if (r.state != scheduler::ReservationState::released)
    throw Error(ErrorCode::not_released, "reservation " + std::to_string(r.id) + " was not released early");
  if (bonused_.count(r.id))
    throw Error(ErrorCode::already_accrued, "early-release bonus already paid for reservation " +
                                                std::to_string(r.id));
  const Tokens delta = early_release_delta(freed, reserved);
  bonused_.insert(r.id);
  ledger_.append({now, r.user, delta, EntryReason::early_release_bonus, reservation_ref(r.id)});
  return delta;
}

Tokens Economy::compensate_preemption(const scheduler::Reservation& r, Minute now) {
  if (r.state != scheduler::ReservationState::preempted)
    throw Error(ErrorCode::not_preempted, "reservation " + std::to_string(r.id) + " was not preempted");
  if (compensated_.count(r.id))
    throw Error(ErrorCode::already_compensated, "reservation " + std::to_string(r.id) + " already compensated");
  compensated_.insert(r.id);
  ledger_.append({now, r.user, kPreemptionCompensation, EntryReason::preemption_compensation, reservation_ref(r.id)});
  return kPreemptionCompensation;
}

AuctionId Economy::open_auction(const std::string& resource, Interval interval, int unit_count, Minute deadline,
                                Minute now) {
  Auction a;
  a.id = next_auction_++;
  a.resource = resource;
  a.interval = interval;
  a.unit_count = unit_count;
  a.opened_at = now;
  a.deadline = deadline;
  const AuctionId id = a.id;
  auctions_.emplace(id, std::move(a));
  return id;
}

Auction& Economy::auction(AuctionId id) {
  auto it = auctions_.find(id);
  if (it == auctions_.end()) throw Error(ErrorCode::unknown_auction, "no auction " + std::to_string(id));
  return it->second;
}

void Economy::place_bid(AuctionId id, const std::string& user, Tokens amount, Minute now) {
  Auction& a = auction(id);
  if (a.state != AuctionState::open || now > a.deadline)
    throw Error(ErrorCode::auction_closed, "auction " + std::to_string(id) + " is closed");
  if (amount < 1) throw Error(ErrorCode::non_positive_bid, "bid must be at least 1 token");
  if (amount > ledger_.balance(user))
    throw Error(ErrorCode::insufficient_tokens, "bid of " + std::to_string(amount) + " exceeds balance " +
                                                    std::to_string(ledger_.balance(user)));
  for (auto& b : a.bids) {
    if (b.user == user) {
      b.amount = amount;
      b.placed_at = now;
      return;
    }
  }
  a.bids.push_back({user, amount, now});
}

void Economy::withdraw_bid(AuctionId id, const std::string& user) {
  Auction& a = auction(id);
  if (a.state != AuctionState::open) return;
  std::erase_if(a.bids, [&](const Bid& b) { return b.user == user; });
}

std::optional<Bid> Economy::settle_auction(AuctionId id, Minute now, const std::function<bool(const Bid&)>& eligible) {
  Auction& a = auction(id);
  if (a.state != AuctionState::open)
    throw Error(ErrorCode::already_settled, "auction " + std::to_string(id) + " already " +
                                                std::string(to_string(a.state)));
  if (now < a.deadline)
    throw Error(ErrorCode::not_yet_deadline, "auction " + std::to_string(id) + " closes at " + format_iso(a.deadline));
  for (const Bid& b : rank_bids(a.bids)) {
    if (b.amount > ledger_.balance(b.user)) continue;
    if (eligible && !eligible(b)) continue;
    a.state = AuctionState::settled;
    a.winner = b.user;
    a.price = b.amount;
    ledger_.append({now, b.user, -b.amount, EntryReason::auction_payment, "auction:" + std::to_string(id)});
    return b;
  }
  a.state = AuctionState::void_;
  return std::nullopt;
}

void Economy::void_auction(AuctionId id) {
  Auction& a = auction(id);
  if (a.state == AuctionState::open) a.state = AuctionState::void_;
}

const Auction* Economy::find_auction(AuctionId id) const {
  auto it = auctions_.find(id);
  return it == auctions_.end() ? nullptr : &it->second;
}

const Auction* Economy::find_open_auction(const std::string& resource, Interval interval) const {
  for (const auto& [id, a] : auctions_)
    if (a.state == AuctionState::open && a.resource == resource && a.interval == interval) return &a;
  return nullptr;
}

Economy::State Economy::state() const {
  return {ledger_, auctions_, next_auction_, accrued_, bonused_, compensated_};
}

void Economy::restore(State s) {
  ledger_ = std::move(s.ledger);
  auctions_ = std::move(s.auctions);
  next_auction_ = s.next_auction;
  accrued_ = std::move(s.accrued);
  bonused_ = std::move(s.bonused);
  compensated_ = std::move(s.compensated);
}

}  // namespace shary::economy
