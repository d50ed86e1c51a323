#include <gtest/gtest.h>

#include "shary/broker/sim_gpu.hpp"
#include "shary/broker/sim_switch.hpp"
#include "shary/error.hpp"

using namespace shary;
using namespace shary::broker;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::invalid_request;
}

ExecRequest as(std::string user, std::vector<std::string> args, bool admin = false) {
  return {std::move(user), admin, std::move(args)};
}

struct GpuFixture : ::testing::Test {
  GpuFixture() : d("figo", nlohmann::json{{"remotes", {"roma-node-1"}}}) {
    d.bind({{"l40s-cluster", 4}, {"a16-cluster", 4}});
    d.set_users({"alice", "bob"});
    d.apply({ActionKind::grant, {"alice", "l40s-cluster", 2, {0, 120}}, ""});
  }
  SimGpuDriver d;
};

struct SwitchFixture : ::testing::Test {
  SwitchFixture() : d("sup4rnet") {
    d.bind({{"tofino-1", 1}});
    d.set_users({"alice", "bob"});
    d.apply({ActionKind::grant, {"alice", "tofino-1", 0, {0, 120}}, ""});
  }
  SimSwitchDriver d;
};

}  // namespace

TEST_F(GpuFixture, GrantedUnitAttaches) {
  EXPECT_EQ(d.execute(as("alice", {"instance", "create", "box"})).lines[0], "instance box running on roma-node-1");
  auto r = d.execute(as("alice", {"gpu", "add", "box", "l40s-cluster/2"}));
  EXPECT_EQ(r.lines[0], "l40s-cluster/2 attached to box");
  auto list = d.execute(as("alice", {"instance", "list"}));
  ASSERT_EQ(list.data["instances"].size(), 1u);
  EXPECT_EQ(list.data["instances"][0]["gpus"], 1);
  EXPECT_TRUE(list.data["instances"][0]["running"].get<bool>());
  EXPECT_EQ(d.snapshot().sessions, (std::set<SessionKey>{{"alice", "l40s-cluster", 2}}));
}

TEST_F(GpuFixture, AttachErrors) {
  d.execute(as("alice", {"instance", "create", "box"}));
  d.execute(as("alice", {"gpu", "add", "box", "l40s-cluster/2"}));
  d.execute(as("alice", {"instance", "create", "box2"}));
  EXPECT_EQ(code_of([&] { d.execute(as("alice", {"gpu", "add", "box2", "l40s-cluster/2"})); }),
            ErrorCode::unit_already_attached);
  EXPECT_EQ(code_of([&] { d.execute(as("alice", {"gpu", "add", "box2", "l40s-cluster/1"})); }), ErrorCode::no_grant);
  EXPECT_EQ(code_of([&] { d.execute(as("alice", {"gpu", "add", "box2", "2"})); }), ErrorCode::invalid_request);
  EXPECT_EQ(code_of([&] { d.execute(as("bob", {"gpu", "add", "box", "l40s-cluster/2"})); }),
            ErrorCode::unknown_instance);
  EXPECT_EQ(code_of([&] { d.execute(as("mallory", {"instance", "create", "x"})); }), ErrorCode::unknown_user);
  EXPECT_EQ(code_of([&] { d.execute(as("alice", {"teleport"})); }), ErrorCode::unknown_verb);
}

TEST_F(GpuFixture, ProjectsAreIsolated) {
  d.execute(as("alice", {"project", "create", "secret"}));
  EXPECT_EQ(d.execute(as("alice", {"project", "list"})).lines, (std::vector<std::string>{"default", "secret"}));
  EXPECT_TRUE(d.execute(as("bob", {"project", "list", "alice"})).lines.empty());
  d.execute(as("alice", {"instance", "create", "box"}));
  EXPECT_TRUE(d.execute(as("bob", {"instance", "list"})).lines.empty());
}

TEST_F(GpuFixture, TerminateDetachesAndStateRoundTrips) {
  d.execute(as("alice", {"instance", "create", "box"}));
  d.execute(as("alice", {"gpu", "add", "box", "l40s-cluster/2"}));
  nlohmann::json saved = d.state_document();
  d.apply({ActionKind::terminate_best_effort, {"alice", "l40s-cluster", 2, {}}, ""});
  EXPECT_TRUE(d.snapshot().sessions.empty());
  SimGpuDriver copy("figo", nlohmann::json::object());
  copy.load_state(saved);
  EXPECT_EQ(copy.snapshot().sessions.size(), 1u);
  EXPECT_EQ(copy.snapshot().grants, d.snapshot().grants);
}

TEST_F(GpuFixture, VpnIsAStub) {
  EXPECT_EQ(d.execute(as("alice", {"vpn", "up"})).lines[0], "vpn: not implemented (stub)");
}

TEST_F(GpuFixture, Unreachable) {
  d.set_reachable(false);
  EXPECT_EQ(code_of([&] { d.snapshot(); }), ErrorCode::driver_unreachable);
  EXPECT_EQ(code_of([&] { d.execute(as("alice", {"instance", "list"})); }), ErrorCode::driver_unreachable);
}

TEST_F(SwitchFixture, InstallBumpsGeneration) {
  d.execute(as("alice", {"login", "tofino-1"}));
  auto r = d.execute(as("alice", {"install_program", "tofino-1", "l2fwd"}));
  EXPECT_EQ(r.data["generation"], 1);
  EXPECT_EQ(d.execute(as("alice", {"status", "tofino-1"})).lines[0], "tofino-1 generation 1 program l2fwd");
}

TEST_F(SwitchFixture, InstallWithoutGrant) {
  EXPECT_EQ(code_of([&] { d.execute(as("bob", {"install_program", "tofino-1", "x"})); }), ErrorCode::no_grant);
  EXPECT_EQ(code_of([&] { d.execute(as("bob", {"login", "tofino-1"})); }), ErrorCode::no_grant);
}

TEST_F(SwitchFixture, SecondTenantDisrupted) {
  EXPECT_EQ(code_of([&] { d.execute(as("alice", {"admin-grant", "tofino-1", "bob"})); }), ErrorCode::forbidden);
  d.execute(as("ops", {"admin-grant", "tofino-1", "bob"}, true));
  d.execute(as("alice", {"login", "tofino-1"}));
  d.execute(as("bob", {"login", "tofino-1"}));
  d.execute(as("alice", {"install_program", "tofino-1", "l3"}));
  auto st = d.execute(as("alice", {"status", "tofino-1"}));
  EXPECT_EQ(st.data["disrupted"], nlohmann::json::array({"bob"}));
  EXPECT_EQ(st.lines[2], "disrupted bob");
}

TEST_F(SwitchFixture, TerminateLogsOut) {
  d.execute(as("alice", {"login", "tofino-1"}));
  EXPECT_EQ(d.snapshot().sessions.size(), 1u);
  d.apply({ActionKind::terminate_best_effort, {"alice", "tofino-1", 0, {}}, ""});
  EXPECT_TRUE(d.snapshot().sessions.empty());
}

TEST(DriverRegistry, Parse) {
  auto cfg = parse_driver_registry(nlohmann::json::parse(R"([{"id":"a","type":"sim-null"},
    {"id":"b","type":"sim-p4","parameters":{}}])"));
  ASSERT_EQ(cfg.size(), 2u);
  EXPECT_EQ(make_driver(cfg[0])->type(), "sim-null");
  EXPECT_EQ(make_driver(cfg[1])->type(), "sim-p4");
  EXPECT_EQ(code_of([] { make_driver({"c", "sim-warp"}); }), ErrorCode::unknown_driver);
  EXPECT_EQ(code_of([] { parse_driver_registry(nlohmann::json::object()); }), ErrorCode::invalid_request);
}
