#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shary/economy/ledger.hpp"
#include "shary/scheduler/reservation.hpp"

namespace shary::economy {

using AuctionId = std::uint64_t;

struct Bid {
  std::string user;
  Tokens amount = 0;
  Minute placed_at = 0;

  bool operator==(const Bid&) const = default;
};

/// Sealed-bid ordering: amount descending, then earlier placed_at, then smaller user id.
bool outranks(const Bid& a, const Bid& b);
std::vector<Bid> rank_bids(std::vector<Bid> bids);

enum class AuctionState { open, settled, void_ };
std::string_view to_string(AuctionState s);
std::optional<AuctionState> parse_auction_state(std::string_view text);

struct Auction {
  AuctionId id = 0;
  std::string resource;
  Interval interval;
  int unit_count = 1;
  Minute opened_at = 0;
  Minute deadline = 0;
  std::vector<Bid> bids;  // one per user
  AuctionState state = AuctionState::open;
  std::optional<std::string> winner;
  Tokens price = 0;

  const Bid* bid_of(const std::string& user) const;
  bool operator==(const Auction&) const = default;
};

/// Token balances, usage-driven accrual, and sealed-bid first-price auctions.
class Economy {
 public:
  /// Opens an account with the initial grant; no-op for known users.
  void open_account(const std::string& user, Minute now);
  void grant(const std::string& user, Tokens amount, Minute now, std::string ref = "admin");

  /// Appends floor(100 min(B/R,1)) - (50 if B == 0), once per reservation. Throws already-accrued, zero-reserved.
  Tokens accrue_usage(const scheduler::Reservation& r, Minute reserved_minutes, Minute busy_minutes, Minute now);
  /// floor(25 F/R). Throws not-released, already-accrued (second bonus for one reservation).
  Tokens early_release_bonus(const scheduler::Reservation& r, Minute freed_minutes, Minute reserved_minutes,
                             Minute now);
  /// +25. Throws not-preempted, already-compensated.
  Tokens compensate_preemption(const scheduler::Reservation& r, Minute now);

  AuctionId open_auction(const std::string& resource, Interval interval, int unit_count, Minute deadline,
                         Minute now);
  /// Records or replaces the user's bid. Throws auction-closed, insufficient-tokens, non-positive-bid,
  /// unknown-auction.
  void place_bid(AuctionId id, const std::string& user, Tokens amount, Minute now);
  void withdraw_bid(AuctionId id, const std::string& user);

  /// First-price settlement among bids passing `eligible` (and backed by a sufficient balance). The winner's
  /// payment is burned. No eligible bid voids the auction. Throws already-settled, not-yet-deadline.
  std::optional<Bid> settle_auction(AuctionId id, Minute now,
                                    const std::function<bool(const Bid&)>& eligible = {});
  void void_auction(AuctionId id);

  const Auction* find_auction(AuctionId id) const;
  const Auction* find_open_auction(const std::string& resource, Interval interval) const;
  const std::map<AuctionId, Auction>& auctions() const { return auctions_; }

  const TokenLedger& ledger() const { return ledger_; }
  Tokens balance(const std::string& user) const { return ledger_.balance(user); }

  struct State {
    TokenLedger ledger;
    std::map<AuctionId, Auction> auctions;
    AuctionId next_auction = 1;
    std::set<scheduler::ReservationId> accrued;
    std::set<scheduler::ReservationId> bonused;
    std::set<scheduler::ReservationId> compensated;
  };
  State state() const;
  void restore(State s);

  bool operator==(const Economy&) const = default;

 private:
  Auction& auction(AuctionId id);

  TokenLedger ledger_;
  std::map<AuctionId, Auction> auctions_;
  AuctionId next_auction_ = 1;
  std::set<scheduler::ReservationId> accrued_;
  std::set<scheduler::ReservationId> bonused_;
  std::set<scheduler::ReservationId> compensated_;
};

}  // namespace shary::economy
