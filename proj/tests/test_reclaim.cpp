#include <gtest/gtest.h>

#include "support/world.hpp"

using namespace shary;
using namespace shary::scheduler;
using namespace shary::testing;

namespace {

std::string policy_text(const char* owner_rule) {
  return std::string(R"(policy "gpu-reclaim" {
  applies to kind gpu;
  tier "staff" advance 30d priority 1;
  max_duration 8h;
  reclaim if idle > 30m grace 15m;
  on_contention queue;
  owner may_reclaim )") + owner_rule + ";\n}";
}

struct ReclaimTest : ::testing::Test {
  ReclaimTest() {
    w.gpu("gpu", 2, "olivia");
    w.install(policy_text("always"));
    w.account("alice");
    id = w.book("alice", "gpu", 1, span_h(0, 4), at_h(-1));
    w.scheduler->tick(at_h(0));
  }

  std::vector<PreemptionAction> run_until(Minute until) {
    std::vector<PreemptionAction> all;
    for (; clock + 15 <= until; clock += 15)
      for (auto& a : w.scheduler->tick(clock + 15).reclaim) all.push_back(a);
    return all;
  }

  World w;
  ReservationId id = 0;
  Minute clock = at_h(0);
};

}  // namespace

TEST_F(ReclaimTest, IdleReservationScheduledThenFired) {
  auto early = run_until(at_h(0) + 30);
  EXPECT_TRUE(early.empty());  // 30 minutes idle is not more than 30
  auto scheduled = run_until(at_h(0) + 45);
  ASSERT_EQ(scheduled.size(), 1u);
  EXPECT_EQ(scheduled[0].phase, PreemptionAction::Phase::scheduled);
  EXPECT_EQ(scheduled[0].fire_at, at_h(1));
  EXPECT_EQ(w.notes.count("alice", NoticeKind::preemption_warning), 1u);

  auto fired = w.scheduler->tick(at_h(1));
  EXPECT_EQ(fired.preempted, std::vector<ReservationId>{id});
  EXPECT_EQ(w.state(id), ReservationState::preempted);
  EXPECT_EQ(w.get(id).interval, span_h(0, 1));
  EXPECT_EQ(w.notes.count("alice", NoticeKind::preempted), 1u);
  // No-show penalty on the held hour, then compensation.
  EXPECT_EQ(w.economy.balance("alice"),
            economy::kInitialGrant - economy::kNoShowPenalty + economy::kPreemptionCompensation);
  EXPECT_TRUE(w.scheduler->availability("gpu", span_h(1, 4))[0] == std::vector<Interval>{span_h(1, 4)});
}

TEST_F(ReclaimTest, BusyReservationUntouched) {
  w.load("gpu", {0}, at_h(0), at_h(4), 80);
  EXPECT_TRUE(run_until(at_h(3.75)).empty());
  EXPECT_EQ(w.state(id), ReservationState::active);
}

TEST_F(ReclaimTest, ActivityCancelsPendingPreemption) {
  run_until(at_h(0) + 45);
  ASSERT_EQ(w.scheduler->preemptions().size(), 1u);
  w.load("gpu", {0}, at_h(0) + 45, at_h(1), 50);
  auto report = w.scheduler->tick(at_h(1));
  ASSERT_EQ(report.reclaim.size(), 1u);
  EXPECT_EQ(report.reclaim[0].phase, PreemptionAction::Phase::cancelled);
  EXPECT_EQ(w.state(id), ReservationState::active);
}

TEST_F(ReclaimTest, OwnerReclaim) {
  w.load("gpu", {0}, at_h(0), at_h(4), 80);
  EXPECT_THROW(w.scheduler->owner_reclaim("gpu", {"alice"}, at_h(0) + 15), Error);
  auto actions = w.scheduler->owner_reclaim("gpu", {"olivia"}, at_h(0) + 15);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].cause, PreemptionCause::owner);
  EXPECT_EQ(actions[0].fire_at, at_h(0) + 30);
  EXPECT_EQ(w.scheduler->tick(at_h(0) + 30).preempted, std::vector<ReservationId>{id});
  // The owner gets the first look at the freed window.
  bool offered = false;
  for (const auto& [oid, o] : w.scheduler->offers())
    if (o.state == OfferState::open && o.candidate.user == "olivia") offered = true;
  EXPECT_TRUE(offered);
}

TEST_F(ReclaimTest, OwnerReclaimDeniedByPolicy) {
  World v;
  v.gpu("gpu", 1, "olivia");
  v.install(policy_text("never"));
  try {
    v.scheduler->owner_reclaim("gpu", {"olivia"}, at_h(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::owner_reclaim_denied);
  }
}

TEST_F(ReclaimTest, OwnerOwnReservationsExempt) {
  World v;
  v.gpu("gpu", 2, "olivia");
  v.install(policy_text("always"));
  v.book("olivia", "gpu", 1, span_h(0, 4), at_h(-1));
  v.scheduler->tick(at_h(0));
  EXPECT_TRUE(v.scheduler->owner_reclaim("gpu", {"olivia"}, at_h(0)).empty());
}
