#include <gtest/gtest.h>

#include "shary/error.hpp"
#include "shary/service/platform.hpp"
#include "shary/service/state_json.hpp"
#include "support/world.hpp"

using namespace shary;
using namespace shary::service;
using shary::testing::t0;

namespace {

const char* kPolicy = R"(policy "gpu-queue" {
  applies to kind gpu;
  tier "staff" advance 30d priority 1;
  tier "student" advance 7d priority 2;
  max_duration 8h;
  on_contention queue;
  owner may_reclaim always;
})";

CommandResult exec(Platform& p, std::string kind, json payload, std::string actor = "system", Minute ts = t0(),
                   std::string key = {}) {
  return p.execute(Command{std::move(kind), std::move(payload), std::move(actor), ts, std::move(key)});
}

void seed(Platform& p) {
  exec(p, "driver.register", {{"id", "sim"}});
  exec(p, "user.register", {{"user", "alice"}, {"tier", "staff"}});
  exec(p, "user.register", {{"user", "bob"}, {"tier", "student"}});
  exec(p, "resource.register", {{"id", "gpu"}, {"kind", "gpu"}, {"site", "roma"}, {"units", 2}, {"driver", "sim"}});
  exec(p, "policy.install", {{"source", kPolicy}});
}

json booking(const char* start, const char* end, int units = 1) {
  return {{"resource", "gpu"}, {"units", units}, {"start", start}, {"end", end}};
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

TEST(Platform, CommandsBecomeEvents) {
  Platform p;
  seed(p);
  EXPECT_EQ(p.seq(), 5u);
  auto r = exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z"), "alice");
  EXPECT_EQ(r.seq, 6u);
  EXPECT_EQ(r.document["state"], "confirmed");
  EXPECT_EQ(r.document["units"], json::array({0}));
  EXPECT_EQ(p.events().back().kind, "reservation.request");
  EXPECT_EQ(p.events().back().actor, "alice");
}

TEST(Platform, RefusedCommandsLeaveNoTrace) {
  Platform p;
  seed(p);
  auto before = p.seq();
  EXPECT_EQ(code_of([&] { exec(p, "reservation.cancel", {{"id", 42}}, "alice"); }), ErrorCode::unknown_id);
  EXPECT_EQ(code_of([&] { exec(p, "resource.register", {{"id", "x"}}, "alice"); }), ErrorCode::forbidden);
  EXPECT_EQ(code_of([&] { exec(p, "warp.drive", json::object()); }), ErrorCode::invalid_request);
  EXPECT_EQ(code_of([&] { exec(p, "tick", json::object(), "mallory"); }), ErrorCode::unknown_user);
  EXPECT_EQ(p.seq(), before);
}

TEST(Platform, AdmissionRejectionIsADocument) {
  Platform p;
  seed(p);
  auto r = exec(p, "reservation.request", booking("2026-03-02T10:05Z", "2026-03-02T12:00Z"), "alice");
  ASSERT_TRUE(r.rejection);
  EXPECT_EQ(r.rejection->code, ErrorCode::misaligned_interval);
  EXPECT_EQ(r.seq, 0u);
  // Rejections that make the requester an offer candidate are recorded.
  auto far = exec(p, "reservation.request", booking("2026-03-20T10:00Z", "2026-03-20T12:00Z"), "bob");
  EXPECT_EQ(far.rejection->code, ErrorCode::advance_denied);
  EXPECT_GT(far.seq, 0u);
}

TEST(Platform, IdempotentReplayReturnsFirstAnswer) {
  Platform p;
  seed(p);
  auto a = exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z"), "alice", t0(), "k1");
  auto b = exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z"), "alice", t0(), "k1");
  EXPECT_TRUE(b.duplicate);
  EXPECT_EQ(a.seq, b.seq);
  EXPECT_EQ(a.document, b.document);
  EXPECT_EQ(p.scheduler().reservations().size(), 1u);
  // Keys are scoped by actor.
  auto c = exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z"), "bob", t0(), "k1");
  EXPECT_FALSE(c.duplicate);
}

TEST(Platform, ImplicitTickActivates) {
  Platform p;
  seed(p);
  auto r = exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z"), "alice");
  exec(p, "telemetry.ingest",
       {{"resource", "gpu"}, {"unit", 0}, {"ts", "2026-03-02T10:30Z"}, {"util", 50}, {"watts", 90}},
       "system", t0() + 150);
  EXPECT_EQ(p.scheduler().get(r.document["id"].get<std::uint64_t>()).state, scheduler::ReservationState::active);
  EXPECT_EQ(p.events()[p.events().size() - 2].kind, "tick");
  EXPECT_EQ(p.clock(), t0() + 150);
}

TEST(Platform, ReplayReproducesSnapshot) {
  Platform p;
  seed(p);
  exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z", 2), "alice");
  exec(p, "reservation.request", booking("2026-03-02T11:00Z", "2026-03-02T13:00Z"), "bob");
  exec(p, "tokens.grant", {{"user", "bob"}, {"amount", 40}});
  exec(p, "tick", json::object(), "system", t0() + 4 * 60);
  exec(p, "tick", json::object(), "system", t0() + 7 * 60);
  auto copy = Platform::replay(p.events());
  EXPECT_EQ(copy->snapshot().dump(), p.snapshot().dump());
  auto restored = Platform::from_snapshot(p.snapshot());
  EXPECT_EQ(restored->snapshot().dump(), p.snapshot().dump());
}

TEST(Platform, ReplayFromMidSnapshot) {
  Platform p;
  seed(p);
  exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z"), "alice");
  json mid = p.snapshot();
  exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T12:00Z"), "bob");
  exec(p, "tick", json::object(), "system", t0() + 5 * 60);
  auto copy = Platform::replay(p.events(), {}, &mid);
  EXPECT_EQ(copy->snapshot().dump(), p.snapshot().dump());
  EXPECT_EQ(copy->events().size(), p.events().size());
}

TEST(Platform, EmptyLogIsInitialState) {
  Platform fresh;
  EXPECT_EQ(Platform::replay({})->snapshot().dump(), fresh.snapshot().dump());
}

TEST(Platform, SeqGapIsCorrupt) {
  Platform p;
  seed(p);
  auto events = p.events();
  events.erase(events.begin() + 2);
  EXPECT_EQ(code_of([&] { Platform::replay(events); }), ErrorCode::corrupt_log);
}

TEST(Platform, DivergingResultIsCorrupt) {
  Platform p;
  seed(p);
  auto events = p.events();
  events.back().result["document"]["name"] = "tampered";
  EXPECT_EQ(code_of([&] { Platform::replay(events); }), ErrorCode::corrupt_log);
}

TEST(Platform, EventsSince) {
  Platform p;
  seed(p);
  auto tail = p.events_since(3);
  ASSERT_EQ(tail.size(), 2u);
  EXPECT_EQ(tail[0].seq, 4u);
  EXPECT_EQ(p.events_since(0, 2).size(), 2u);
  EXPECT_TRUE(p.events_since(5).empty());
  EXPECT_EQ(event_from_json(to_json(tail[1])), tail[1]);
}

TEST(Platform, UsageReports) {
  Platform p;
  seed(p);
  exec(p, "reservation.request", booking("2026-03-02T10:00Z", "2026-03-02T14:00Z"), "alice");
  json samples = json::array();
  for (Minute m = 0; m < 240; ++m)
    samples.push_back({{"resource", "gpu"}, {"unit", 0}, {"ts", format_iso(t0() + 120 + m)}, {"util", 95}, {"watts", 200}});
  exec(p, "telemetry.ingest", {{"samples", samples}}, "system", t0() + 120);
  exec(p, "tick", json::object(), "system", t0() + 6 * 60);
  auto r = p.usage_report("alice", {t0(), t0() + 8 * 60}, t0() + 6 * 60);
  EXPECT_EQ(r.batch_minutes, 240);
  EXPECT_NEAR(r.energy_kwh, 0.8, 1e-9);
  EXPECT_EQ(p.usage_report("gpu", {t0(), t0() + 8 * 60}, t0() + 6 * 60).batch_minutes, 240);
  EXPECT_EQ(p.usage_report("bob", {t0(), t0() + 8 * 60}, t0() + 6 * 60).covered_minutes, 0);
  EXPECT_EQ(code_of([&] { p.usage_report("nobody", {t0(), t0() + 60}, t0()); }), ErrorCode::unknown_subject);
  // Fully busy run: +100 tokens at completion.
  EXPECT_EQ(p.economy().balance("alice"), economy::kInitialGrant + 100);
}

TEST(Platform, PolicyDiagnosticsRejected) {
  Platform p;
  auto r = exec(p, "policy.install", {{"source", "policy \"x\" {"}});
  ASSERT_TRUE(r.rejection);
  EXPECT_EQ(r.rejection->code, ErrorCode::parse_error);
  EXPECT_FALSE(r.document["diagnostics"].empty());
  EXPECT_EQ(r.seq, 0u);
}
