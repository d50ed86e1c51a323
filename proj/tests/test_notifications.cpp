#include <gtest/gtest.h>

#include "shary/error.hpp"
#include "shary/service/notifications.hpp"
#include "shary/service/platform.hpp"
#include "support/world.hpp"

using namespace shary;
using namespace shary::service;
using scheduler::NoticeKind;
using shary::testing::t0;

namespace {

struct CountingTransport final : Transport {
  explicit CountingTransport(int failures) : failures(failures) {}
  bool deliver(const Notification&, const UserRecord&, std::string& error) override {
    ++calls;
    if (calls <= failures) {
      error = "connection refused";
      return false;
    }
    return true;
  }
  int failures;
  int calls = 0;
};

std::map<std::string, UserRecord> users() {
  return {{"alice", {"alice", "staff", false, Channel::log, ""}},
          {"bob", {"bob", "student", false, Channel::webhook, "http://127.0.0.1:9/hook"}},
          {"carol", {"carol", "student", false, Channel::email_stub, ""}}};
}

}  // namespace

TEST(Notifications, LogChannelDeliveredImmediately) {
  auto u = users();
  NotificationCenter c(u);
  const auto& n = c.record("alice", NoticeKind::offer, "last-minute availability", "body", 5);
  EXPECT_TRUE(n.delivered);
  EXPECT_EQ(n.channel, Channel::log);
  EXPECT_TRUE(c.pending().empty());
}

TEST(Notifications, OtherChannelsWaitForDispatcher) {
  auto u = users();
  NotificationCenter c(u);
  c.record("bob", NoticeKind::offer, "s", "b", 5);
  c.record("carol", NoticeKind::expiry, "s", "b", 5);
  EXPECT_EQ(c.pending().size(), 2u);
  c.mark_delivery(1, false, 3, "down");
  EXPECT_EQ(c.pending().size(), 1u);
  EXPECT_EQ(c.for_user("bob").size(), 1u);
  EXPECT_THROW(c.mark_delivery(99, true, 1, ""), Error);
}

TEST(Notifications, UnknownUser) {
  auto u = users();
  NotificationCenter c(u);
  try {
    c.record("mallory", NoticeKind::offer, "s", "b", 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_user);
  }
}

TEST(Notifications, WebhookDownFourTimes) {
  auto u = users();
  NotificationCenter c(u);
  const auto& n = c.record("bob", NoticeKind::offer, "s", "b", 0);
  CountingTransport down(4);
  auto out = dispatch(n, u.at("bob"), down);
  EXPECT_FALSE(out.delivered);
  EXPECT_EQ(out.attempts, 3);
  EXPECT_EQ(down.calls, 3);
  EXPECT_EQ(out.error, "connection refused");
}

TEST(Notifications, RetrySucceeds) {
  auto u = users();
  NotificationCenter c(u);
  const auto& n = c.record("bob", NoticeKind::offer, "s", "b", 0);
  CountingTransport flaky(1);
  auto out = dispatch(n, u.at("bob"), flaky);
  EXPECT_TRUE(out.delivered);
  EXPECT_EQ(out.attempts, 2);
}

TEST(Notifications, EmailStubKeepsOutbox) {
  auto u = users();
  NotificationCenter c(u);
  const auto& n = c.record("carol", NoticeKind::expiry, "request expired", "r1", 0);
  EmailStubTransport email;
  EXPECT_TRUE(dispatch(n, u.at("carol"), email).delivered);
  ASSERT_EQ(email.sent().size(), 1u);
  EXPECT_NE(email.sent()[0].find("request expired"), std::string::npos);
}

// End to end: a cancellation frees capacity, the queued user gets an offer on the log channel.
TEST(Notifications, OfferHookThroughPlatform) {
  Platform p;
  auto exec = [&](std::string kind, json payload, std::string actor = "system") {
    return p.execute({std::move(kind), std::move(payload), std::move(actor), t0(), {}});
  };
  exec("driver.register", {{"id", "sim"}});
  for (auto name : {"alice", "bob", "carol"}) exec("user.register", {{"user", name}, {"tier", "staff"}});
  exec("resource.register", {{"id", "gpu"}, {"kind", "gpu"}, {"site", "roma"}, {"units", 1}, {"driver", "sim"}});
  exec("policy.install", {{"source", R"(policy "q" { applies to kind gpu; tier "staff" advance 30d; max_duration 8h;
    on_contention queue; })"}});
  auto a = exec("reservation.request", {{"resource", "gpu"}, {"start", "2026-03-02T09:00Z"}, {"end", "2026-03-02T11:00Z"}},
                "alice");
  exec("reservation.request", {{"resource", "gpu"}, {"start", "2026-03-02T11:00Z"}, {"end", "2026-03-02T12:00Z"}},
       "carol");
  exec("reservation.request", {{"resource", "gpu"}, {"start", "2026-03-02T09:00Z"}, {"end", "2026-03-02T12:00Z"}},
       "bob");
  exec("reservation.cancel", {{"id", a.document["id"]}}, "alice");
  auto mine = p.notifications().for_user("bob");
  ASSERT_EQ(mine.size(), 1u);
  EXPECT_EQ(mine[0].kind, NoticeKind::offer);
  EXPECT_EQ(mine[0].subject, "last-minute availability");
  EXPECT_EQ(mine[0].channel, Channel::log);
  EXPECT_TRUE(mine[0].delivered);
}
