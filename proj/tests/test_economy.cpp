#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "shary/economy/economy.hpp"
#include "shary/error.hpp"
#include "shary/scheduler/reservation.hpp"

using namespace shary;
using namespace shary::economy;
using scheduler::Reservation;
using scheduler::ReservationState;

namespace {

Reservation res(scheduler::ReservationId id, ReservationState s, std::string user = "alice") {
  Reservation r;
  r.id = id;
  r.user = std::move(user);
  r.state = s;
  return r;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::invalid_request;
}

}  // namespace

TEST(Accrual, ReferenceValues) {
  EXPECT_EQ(accrual_delta(240, 180), 75);
  EXPECT_EQ(accrual_delta(240, 0), -50);
  EXPECT_EQ(accrual_delta(240, 300), 100);
  EXPECT_EQ(code_of([] { accrual_delta(0, 10); }), ErrorCode::zero_reserved);
}

TEST(Accrual, OncePerReservation) {
  Economy e;
  e.open_account("alice", 0);
  auto r = res(1, ReservationState::completed);
  EXPECT_EQ(e.accrue_usage(r, 240, 180, 10), 75);
  EXPECT_EQ(e.balance("alice"), kInitialGrant + 75);
  EXPECT_EQ(code_of([&] { e.accrue_usage(r, 240, 180, 10); }), ErrorCode::already_accrued);
}

TEST(Accrual, MonotoneInBusy) {
  for (Minute R = 15; R <= 480; R += 15)
    for (Minute B = 15; B <= 2 * R; B += 15) EXPECT_LE(accrual_delta(R, B - 15), accrual_delta(R, B));
}

TEST(EarlyRelease, ReferenceValues) {
  EXPECT_EQ(early_release_delta(120, 240), 12);
  EXPECT_EQ(early_release_delta(0, 240), 0);
  EXPECT_EQ(early_release_delta(240, 240), 25);
  Economy e;
  e.open_account("alice", 0);
  EXPECT_EQ(code_of([&] { e.early_release_bonus(res(1, ReservationState::completed), 10, 20, 0); }),
            ErrorCode::not_released);
  EXPECT_EQ(e.early_release_bonus(res(1, ReservationState::released), 120, 240, 0), 12);
}

TEST(Compensation, OnlyPreemptedOnce) {
  Economy e;
  e.open_account("alice", 0);
  EXPECT_EQ(e.compensate_preemption(res(3, ReservationState::preempted), 0), 25);
  EXPECT_EQ(code_of([&] { e.compensate_preemption(res(3, ReservationState::preempted), 0); }),
            ErrorCode::already_compensated);
  EXPECT_EQ(code_of([&] { e.compensate_preemption(res(4, ReservationState::completed), 0); }),
            ErrorCode::not_preempted);
}

TEST(Bids, Validation) {
  Economy e;
  e.open_account("alice", 0);
  e.grant("alice", -400, 0);  // balance 100
  e.open_account("bob", 0);
  e.grant("bob", -450, 0);  // balance 50
  AuctionId a = e.open_auction("gpu", {0, 60}, 1, 100, 0);
  e.place_bid(a, "alice", 60, 10);
  EXPECT_EQ(code_of([&] { e.place_bid(a, "bob", 60, 10); }), ErrorCode::insufficient_tokens);
  EXPECT_EQ(code_of([&] { e.place_bid(a, "bob", 0, 10); }), ErrorCode::non_positive_bid);
  EXPECT_EQ(code_of([&] { e.place_bid(a, "bob", 10, 101); }), ErrorCode::auction_closed);
  EXPECT_EQ(code_of([&] { e.place_bid(99, "bob", 10, 10); }), ErrorCode::unknown_auction);
  // Re-bid replaces and moves placed_at.
  e.place_bid(a, "alice", 70, 20);
  ASSERT_EQ(e.find_auction(a)->bids.size(), 1u);
  EXPECT_EQ(e.find_auction(a)->bids[0].placed_at, 20);
}

TEST(Settle, HigherBidWinsAndPays) {
  Economy e;
  for (auto u : {"alice", "bob"}) e.open_account(u, 0);
  AuctionId a = e.open_auction("gpu", {0, 60}, 1, 100, 0);
  e.place_bid(a, "alice", 40, 1);
  e.place_bid(a, "bob", 55, 2);
  EXPECT_EQ(code_of([&] { e.settle_auction(a, 99); }), ErrorCode::not_yet_deadline);
  auto w = e.settle_auction(a, 100);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->user, "bob");
  EXPECT_EQ(e.balance("bob"), kInitialGrant - 55);
  EXPECT_EQ(e.balance("alice"), kInitialGrant);
  EXPECT_EQ(e.ledger().burned(), 55);
  EXPECT_EQ(code_of([&] { e.settle_auction(a, 100); }), ErrorCode::already_settled);
}

TEST(Settle, TieBreaks) {
  Economy e;
  for (auto u : {"alice", "bob", "carol"}) e.open_account(u, 0);
  AuctionId a = e.open_auction("gpu", {0, 60}, 1, 100, 0);
  e.place_bid(a, "bob", 40, 2);
  e.place_bid(a, "alice", 40, 1);
  EXPECT_EQ(e.settle_auction(a, 100)->user, "alice");
  AuctionId b = e.open_auction("gpu", {60, 120}, 1, 100, 0);
  e.place_bid(b, "carol", 40, 5);
  e.place_bid(b, "bob", 40, 5);
  EXPECT_EQ(e.settle_auction(b, 100)->user, "bob");
}

TEST(Settle, NoBidsVoids) {
  Economy e;
  AuctionId a = e.open_auction("gpu", {0, 60}, 1, 100, 0);
  EXPECT_FALSE(e.settle_auction(a, 100));
  EXPECT_EQ(e.find_auction(a)->state, AuctionState::void_);
}

TEST(Settle, IneligibleBidderSkipped) {
  Economy e;
  for (auto u : {"alice", "bob"}) e.open_account(u, 0);
  AuctionId a = e.open_auction("gpu", {0, 60}, 1, 100, 0);
  e.place_bid(a, "alice", 90, 1);
  e.place_bid(a, "bob", 10, 2);
  auto w = e.settle_auction(a, 100, [](const Bid& b) { return b.user != "alice"; });
  EXPECT_EQ(w->user, "bob");
  EXPECT_EQ(e.find_auction(a)->price, 10);
}

TEST(Settle, PermutationInvariant) {
  std::mt19937 rng(3);
  for (int round = 0; round < 50; ++round) {
    std::vector<Bid> bids;
    for (int i = 0; i < 6; ++i)
      bids.push_back({"u" + std::to_string(i), static_cast<Tokens>(1 + rng() % 5), static_cast<Minute>(rng() % 3)});
    std::optional<std::string> first;
    for (int perm = 0; perm < 5; ++perm) {
      std::shuffle(bids.begin(), bids.end(), rng);
      Economy e;
      AuctionId a = e.open_auction("gpu", {0, 60}, 1, 10, 0);
      for (const auto& b : bids) {
        e.open_account(b.user, 0);
        e.place_bid(a, b.user, b.amount, b.placed_at);
      }
      auto w = e.settle_auction(a, 10);
      if (!first) first = w->user;
      EXPECT_EQ(w->user, *first);
    }
  }
}

TEST(Ledger, BalancesRecomputeFromEntries) {
  Economy e;
  e.open_account("alice", 0);
  e.open_account("bob", 0);
  e.accrue_usage(res(1, ReservationState::completed), 60, 0, 5);
  e.grant("bob", 7, 6);
  EXPECT_EQ(e.ledger().recompute_balances(), e.ledger().balances());
  auto rebuilt = TokenLedger::from_entries(e.ledger().entries(), {"alice", "bob"});
  EXPECT_EQ(rebuilt, e.ledger());
  EXPECT_EQ(e.balance("alice"), kInitialGrant - 50);
}
