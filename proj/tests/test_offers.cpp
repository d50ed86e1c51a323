#include <gtest/gtest.h>

#include "support/world.hpp"

using namespace shary;
using namespace shary::scheduler;
using namespace shary::testing;

namespace {

const char* kPolicy = R"(policy "gpu-queue" {
  applies to kind gpu;
  tier "staff" advance 30d priority 1;
  tier "student" advance 7d priority 2;
  max_duration 8h;
  on_contention queue;
  owner may_reclaim always;
})";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::invalid_request;
}

// One unit. alice holds [1h,3h), carol holds [3h,4h), and bob then dave queue for [1h,4h), which cannot be
// promoted while carol's booking stands.
struct OfferTest : ::testing::Test {
  OfferTest() {
    w.gpu("one", 1);
    w.install(kPolicy);
    alice = w.book("alice", "one", 1, span_h(1, 3), at_h(-2));
    w.book("carol", "one", 1, span_h(3, 4), at_h(-2));
    bob = w.book("bob", "one", 1, span_h(1, 4), at_h(-1));
    dave = w.book("dave", "one", 1, span_h(1, 4), at_h(-0.5));
  }

  std::vector<const LastMinuteOffer*> open() const {
    std::vector<const LastMinuteOffer*> out;
    for (const auto& [id, o] : w.scheduler->offers())
      if (o.state == OfferState::open) out.push_back(&o);
    return out;
  }

  World w;
  ReservationId alice = 0, bob = 0, dave = 0;
};

}  // namespace

TEST_F(OfferTest, CancellationOffersFreedWindow) {
  w.scheduler->cancel_reservation(alice, {"alice"}, at_h(0));
  EXPECT_EQ(w.state(bob), ReservationState::queued);
  auto o = open();
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0]->candidate.user, "bob");
  EXPECT_EQ(o[0]->window, span_h(1, 3));
  EXPECT_EQ(o[0]->units, std::vector<int>{0});
  EXPECT_EQ(o[0]->ttl, 30);
  ASSERT_EQ(w.notes.count("bob", NoticeKind::offer), 1u);
  EXPECT_EQ(w.notes.notices.back().first.subject, "last-minute availability");
}

TEST_F(OfferTest, LapsedOfferMovesToNextCandidate) {
  w.scheduler->cancel_reservation(alice, {"alice"}, at_h(0));
  OfferId first = open()[0]->id;
  EXPECT_TRUE(w.scheduler->tick(at_h(0) + 15).offers_expired.empty());
  auto report = w.scheduler->tick(at_h(0) + 30);
  EXPECT_EQ(report.offers_expired, std::vector<OfferId>{first});
  EXPECT_EQ(w.scheduler->offers().at(first).state, OfferState::expired);
  auto o = open();
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0]->candidate.user, "dave");
  EXPECT_EQ(o[0]->chain, w.scheduler->offers().at(first).chain);
  EXPECT_EQ(code_of([&] { w.scheduler->accept_offer(first, {"bob"}, at_h(0) + 30); }), ErrorCode::offer_unavailable);
}

TEST_F(OfferTest, AcceptConfirmsAndSupersedesQueuedRequest) {
  w.scheduler->cancel_reservation(alice, {"alice"}, at_h(0));
  OfferId id = open()[0]->id;
  EXPECT_EQ(code_of([&] { w.scheduler->accept_offer(id, {"dave"}, at_h(0) + 5); }), ErrorCode::forbidden_actor);
  Reservation r = w.scheduler->accept_offer(id, {"bob"}, at_h(0) + 5);
  EXPECT_EQ(r.state, ReservationState::confirmed);
  EXPECT_EQ(r.interval, span_h(1, 3));
  EXPECT_EQ(w.state(bob), ReservationState::cancelled);
  EXPECT_EQ(w.scheduler->offers().at(id).state, OfferState::accepted);
  EXPECT_EQ(w.scheduler->offers().at(id).accepted_reservation, r.id);
  EXPECT_TRUE(open().empty());  // nothing left in the window for dave
  EXPECT_EQ(code_of([&] { w.scheduler->accept_offer(id, {"bob"}, at_h(0) + 6); }), ErrorCode::offer_unavailable);
  EXPECT_EQ(code_of([&] { w.scheduler->accept_offer(77, {"bob"}, at_h(0) + 6); }), ErrorCode::unknown_offer);
}

TEST_F(OfferTest, DeclinePassesOn) {
  w.scheduler->cancel_reservation(alice, {"alice"}, at_h(0));
  OfferId id = open()[0]->id;
  w.scheduler->decline_offer(id, {"bob"}, at_h(0) + 1);
  auto o = open();
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0]->candidate.user, "dave");
  w.scheduler->decline_offer(o[0]->id, {"dave"}, at_h(0) + 2);
  EXPECT_TRUE(open().empty());
}

TEST_F(OfferTest, NoCandidatesNoOffer) {
  World v;
  v.gpu("one", 1);
  v.install(kPolicy);
  EXPECT_TRUE(v.scheduler->generate_offers(span_h(1, 3), "one", {0}, at_h(0)).empty());
  auto id = v.book("alice", "one", 1, span_h(1, 3), at_h(0));
  v.scheduler->cancel_reservation(id, {"alice"}, at_h(0));
  EXPECT_TRUE(v.scheduler->offers().empty());
}

TEST_F(OfferTest, BeyondHorizonNoOffer) {
  EXPECT_TRUE(w.scheduler->generate_offers(span_h(30, 32), "one", {0}, at_h(0)).empty());
}

TEST_F(OfferTest, StaticCalendarIssuesNothing) {
  World v(SchedulerConfig{.dynamic_reallocation = false});
  v.gpu("one", 1);
  v.install(kPolicy);
  auto a = v.book("alice", "one", 1, span_h(1, 3), at_h(-2));
  v.book("carol", "one", 1, span_h(3, 4), at_h(-2));
  v.book("bob", "one", 1, span_h(1, 4), at_h(-1));
  v.scheduler->cancel_reservation(a, {"alice"}, at_h(0));
  EXPECT_TRUE(v.scheduler->offers().empty());
}

TEST_F(OfferTest, TakenCapacitySupersedesOffer) {
  w.scheduler->cancel_reservation(alice, {"alice"}, at_h(0));
  OfferId id = open()[0]->id;
  // An operator books straight over the freed window.
  ASSERT_TRUE(w.scheduler->force_reservation("ops", "one", {0}, span_h(1, 3), at_h(0)).accepted());
  auto report = w.scheduler->tick(at_h(0) + 1);
  EXPECT_EQ(report.offers_superseded, std::vector<OfferId>{id});
  EXPECT_TRUE(open().empty());
}
