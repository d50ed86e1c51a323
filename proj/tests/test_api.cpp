#include <gtest/gtest.h>
#include <httplib.h>

#include "shary/service/api.hpp"
#include "support/service_fixture.hpp"

using namespace shary;
using namespace shary::service;
using shary::testing::api;
using shary::testing::shipped_config;

namespace {

struct ApiTest : ::testing::Test {
  ApiTest() : svc(shipped_config()) { svc.start(); }

  ApiResponse call(std::string method, std::string path, std::string token, json body = nullptr) {
    return handle_request(svc, api(std::move(method), std::move(path), std::move(token), std::move(body)));
  }
  ApiResponse reserve(const std::string& token, const char* start, const char* end, int units = 1,
                      const char* resource = "l40s-cluster") {
    return call("POST", "/v1/reservations", token,
                {{"resource", resource}, {"units", units}, {"start", start}, {"end", end}});
  }

  Service svc;
};

}  // namespace

TEST_F(ApiTest, CreateReservation) {
  auto r = reserve("alice-token", "2026-03-02T10:00Z", "2026-03-02T12:00Z");
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(r.body["state"], "confirmed");
  EXPECT_EQ(r.body["user"], "alice");
  EXPECT_EQ(r.body["start"], "2026-03-02T10:00Z");
  EXPECT_FALSE(r.body["event_seq"].is_null());
  EXPECT_EQ(r.headers["X-Event-Seq"], r.body["event_seq"].dump());

  auto got = call("GET", "/v1/reservations/" + r.body["id"].dump(), "alice-token");
  EXPECT_EQ(got.status, 200);
  EXPECT_EQ(got.body["id"], r.body["id"]);
}

TEST_F(ApiTest, MisalignedIsUnprocessable) {
  auto r = reserve("alice-token", "2026-03-02T10:05Z", "2026-03-02T12:00Z");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"]["code"], "misaligned-interval");
}

TEST_F(ApiTest, StatusCodes) {
  EXPECT_EQ(call("GET", "/v1/resources", "").status, 401);
  EXPECT_EQ(call("GET", "/v1/resources", "nope").status, 401);
  EXPECT_EQ(call("GET", "/v1/nowhere", "alice-token").status, 404);
  EXPECT_EQ(call("PUT", "/v1/resources", "alice-token").status, 405);
  EXPECT_EQ(call("GET", "/v1/reservations/999", "alice-token").status, 404);
  EXPECT_EQ(call("GET", "/v1/reservations/abc", "alice-token").status, 422);
  EXPECT_EQ(call("POST", "/v1/tick", "alice-token").status, 403);
  ApiRequest bad = api("POST", "/v1/reservations", "alice-token");
  bad.body = "{oops";
  EXPECT_EQ(handle_request(svc, bad).status, 422);
  // Capacity overflow is a conflict.
  EXPECT_EQ(reserve("alice-token", "2026-03-02T10:00Z", "2026-03-02T12:00Z", 5).status, 409);
}

TEST_F(ApiTest, SeedCatalogListed) {
  auto r = call("GET", "/v1/resources", "carol-token");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["resources"].size(), 10u);
  auto one = call("GET", "/v1/resources/l40s-cluster", "carol-token");
  EXPECT_EQ(one.body["policy"], "gpu-default");
  EXPECT_EQ(call("GET", "/v1/resources", "carol-token", nullptr).body["resources"][0]["id"], "a16-cluster");
}

TEST_F(ApiTest, EventsSince) {
  auto head = call("GET", "/v1/events", "bob-token").body["head"].get<std::uint64_t>();
  reserve("alice-token", "2026-03-02T10:00Z", "2026-03-02T12:00Z");
  ApiRequest q = api("GET", "/v1/events", "bob-token");
  q.query["since"] = std::to_string(head);
  auto r = handle_request(svc, q);
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["events"].size(), 1u);
  EXPECT_EQ(r.body["events"][0]["kind"], "reservation.request");
  EXPECT_EQ(r.body["events"][0]["seq"], head + 1);
  q.query["since"] = "x";
  EXPECT_EQ(handle_request(svc, q).status, 422);
}

TEST_F(ApiTest, IdempotencyHeader) {
  ApiRequest r = api("POST", "/v1/reservations", "alice-token",
                     {{"resource", "l40s-cluster"}, {"start", "2026-03-02T10:00Z"}, {"end", "2026-03-02T12:00Z"}});
  r.idempotency_key = "abc";
  auto a = handle_request(svc, r);
  auto b = handle_request(svc, r);
  EXPECT_EQ(a.body["id"], b.body["id"]);
  EXPECT_EQ(b.headers["Idempotent-Replay"], "true");
  EXPECT_EQ(call("GET", "/v1/reservations", "ops-token").body["reservations"].size(), 1u);
}

TEST_F(ApiTest, SealedBids) {
  // Contention on l40s-cluster opens an auction.
  ASSERT_EQ(reserve("alice-token", "2026-03-02T10:00Z", "2026-03-02T12:00Z", 4).status, 201);
  auto bob = reserve("bob-token", "2026-03-02T10:00Z", "2026-03-02T12:00Z");
  auto carol = reserve("carol-token", "2026-03-02T10:00Z", "2026-03-02T12:00Z");
  ASSERT_FALSE(bob.body["auction"].is_null()) << bob.body.dump();
  auto id = bob.body["auction"].dump();
  EXPECT_EQ(call("POST", "/v1/auctions/" + id + "/bids", "bob-token", {{"amount", 40}}).status, 201);
  EXPECT_EQ(call("POST", "/v1/auctions/" + id + "/bids", "carol-token", {{"amount", 60}}).status, 201);
  auto seen = call("GET", "/v1/auctions", "bob-token").body["auctions"];
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0]["bid_count"], 2);
  ASSERT_EQ(seen[0]["bids"].size(), 1u);
  EXPECT_EQ(seen[0]["bids"][0]["user"], "bob");
  EXPECT_EQ(call("POST", "/v1/auctions/" + id + "/bids", "bob-token", {{"amount", 100000}}).status, 409);
  // The event feed does not leak amounts to other users.
  auto feed = call("GET", "/v1/events", "carol-token").body["events"];
  int bob_bids = 0;
  for (const auto& e : feed) {
    if (e["kind"] == "auction.bid" && e["actor"] == "bob") {
      ++bob_bids;
      EXPECT_FALSE(e["payload"].contains("amount"));
    }
    if (e["kind"] == "auction.bid" && e["actor"] == "carol") {
      EXPECT_EQ(e["payload"]["amount"], 60);
    }
  }
  EXPECT_EQ(bob_bids, 1);
}

TEST_F(ApiTest, TokensAndMe) {
  auto me = call("GET", "/v1/me", "alice-token");
  EXPECT_EQ(me.body["user"], "alice");
  EXPECT_EQ(me.body["admin"], false);
  EXPECT_EQ(call("POST", "/v1/accounts/alice/tokens", "alice-token", {{"amount", 10}}).status, 403);
  auto g = call("POST", "/v1/accounts/alice/tokens", "ops-token", {{"amount", 10}});
  EXPECT_EQ(g.status, 200);
  EXPECT_EQ(g.body["balance"], me.body["balance"].get<long long>() + 10);
  EXPECT_EQ(call("GET", "/v1/accounts/alice/tokens", "alice-token").body["entries"].size(), 2u);
}

TEST_F(ApiTest, AvailabilityGrid) {
  reserve("alice-token", "2026-03-02T10:00Z", "2026-03-02T12:00Z", 2);
  ApiRequest q = api("GET", "/v1/availability", "carol-token");
  q.query = {{"resource", "l40s-cluster"}, {"start", "2026-03-02T08:00Z"}, {"end", "2026-03-02T14:00Z"}};
  auto r = handle_request(svc, q);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["units"].size(), 4u);
  EXPECT_EQ(r.body["units"][0]["bookings"].size(), 1u);
  EXPECT_EQ(r.body["units"][3]["bookings"].size(), 0u);
  EXPECT_EQ(r.body["slot_minutes"], 15);
}

TEST_F(ApiTest, PolicyInstallDiagnostics) {
  auto bad = call("POST", "/v1/policies", "ops-token", {{"source", "policy \"x\" { bogus; }"}});
  EXPECT_EQ(bad.status, 422);
  EXPECT_FALSE(bad.body["diagnostics"].empty());
  EXPECT_EQ(call("POST", "/v1/policies", "alice-token", {{"source", "x"}}).status, 403);
}

TEST_F(ApiTest, ClockMovesForwardOnly) {
  EXPECT_EQ(call("GET", "/v1/clock", "alice-token").body["now"], "2026-03-02T08:00Z");
  EXPECT_EQ(call("POST", "/v1/clock", "alice-token", {{"now", "2026-03-02T09:00Z"}}).status, 403);
  EXPECT_EQ(call("POST", "/v1/clock", "ops-token", {{"now", "2026-03-02T09:00Z"}}).status, 200);
  EXPECT_EQ(call("POST", "/v1/clock", "ops-token", {{"now", "2026-03-02T08:30Z"}}).status, 422);
}

TEST(ApiServerTest, HttpRoundTrip) {
  Service svc(shipped_config());
  svc.start();
  ApiServer server(svc);
  int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  server.start();
  httplib::Client cli("127.0.0.1", port);
  cli.set_bearer_token_auth("alice-token");
  auto res = cli.Post("/v1/reservations",
                      R"({"resource":"a16-cluster","start":"2026-03-02T10:00Z","end":"2026-03-02T11:00Z"})",
                      "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(json::parse(res->body)["state"], "confirmed");
  auto list = cli.Get("/v1/events?since=0&limit=2");
  ASSERT_TRUE(list);
  EXPECT_EQ(json::parse(list->body)["events"].size(), 2u);
  httplib::Client anon("127.0.0.1", port);
  auto denied = anon.Get("/v1/resources");
  ASSERT_TRUE(denied);
  EXPECT_EQ(denied->status, 401);
  server.stop();
}
