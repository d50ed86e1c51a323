#include <gtest/gtest.h>

#include "shary/error.hpp"
#include "shary/policy/policy.hpp"

using namespace shary;
using namespace shary::policy;

namespace {

const char* kGpuDefault = R"(policy "gpu-default" {
  applies to kind gpu;
  tier "staff" advance 30d priority 1;
  tier "student" advance 7d priority 2;
  max_duration 8h;
  reclaim if idle > 30m grace 15m;
  on_contention auction deadline 2h;
  owner may_reclaim always;
}
)";

catalog::ResourceDescriptor gpu(const std::string& id) {
  return {id, catalog::ResourceKind::gpu, "roma", 4, {}, "shared", "figo"};
}

Policy parsed(const std::string& src) {
  auto r = parse_policy(src);
  EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : to_string(r.diagnostics.front()));
  return r.policy.value_or(Policy{});
}

}  // namespace

TEST(PolicyParse, ReferenceExample) {
  Policy p = parsed(kGpuDefault);
  EXPECT_EQ(p.name, "gpu-default");
  EXPECT_EQ(p.applies_to.target, AppliesTo::Target::kind);
  EXPECT_EQ(p.applies_to.value, "gpu");
  ASSERT_EQ(p.tiers.size(), 2u);
  EXPECT_EQ(p.tiers[0], (Tier{"staff", 30 * kDay, 1}));
  EXPECT_EQ(p.tiers[1], (Tier{"student", 7 * kDay, 2}));
  EXPECT_EQ(p.max_duration, 8 * kHour);
  EXPECT_EQ(p.reclaim_idle_after, 30);
  EXPECT_EQ(p.reclaim_grace, 15);
  EXPECT_EQ(p.contention, ContentionMode::auction);
  EXPECT_EQ(p.auction_deadline, 2 * kHour);
  EXPECT_TRUE(p.owner_reclaim);
}

TEST(PolicyParse, EmptySource) {
  auto r = parse_policy("");
  ASSERT_FALSE(r.ok());
  ASSERT_FALSE(r.diagnostics.empty());
  EXPECT_EQ(r.diagnostics[0].line, 1);
  EXPECT_EQ(r.diagnostics[0].column, 1);
  EXPECT_EQ(r.diagnostics[0].message, "expected 'policy'");
}

TEST(PolicyParse, DuplicateTierNamesSecondLine) {
  auto r = parse_policy("policy \"p\" {\n applies to kind gpu;\n tier \"a\" advance 1d;\n tier \"a\" advance 2d;\n}");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.diagnostics[0].line, 4);
  EXPECT_NE(r.diagnostics[0].message.find("line 3"), std::string::npos);
}

TEST(PolicyParse, ReportsSeveralErrors) {
  auto r = parse_policy("policy \"p\" {\n applies to kind gpu;\n bogus 1;\n max_duration 3x;\n}");
  ASSERT_FALSE(r.ok());
  EXPECT_GE(r.diagnostics.size(), 2u);
}

TEST(PolicyPrint, RoundTrip) {
  Policy p = parsed(kGpuDefault);
  EXPECT_EQ(parsed(pretty_print(p)), p);
  EXPECT_EQ(pretty_print(parsed(pretty_print(p))), pretty_print(p));
}

TEST(PolicyPrint, DefaultsRoundTrip) {
  Policy p = parsed("policy \"m\" { applies to resource \"tofino-1\"; owner may_reclaim never; max_active 2; }");
  EXPECT_EQ(parsed(pretty_print(p)), p);
}

TEST(Advance, Boundaries) {
  Policy p = parsed(kGpuDefault);
  Minute now = 1000 * kDay;
  EXPECT_TRUE(check_advance(p, "student", now, now + 6 * kDay).allowed);
  EXPECT_TRUE(check_advance(p, "student", now, now + 7 * kDay).allowed);
  auto d = check_advance(p, "student", now, now + 8 * kDay);
  EXPECT_FALSE(d.allowed);
  EXPECT_EQ(d.reason, "advance window exceeded");
  EXPECT_THROW(check_advance(p, "nobody", now, now), Error);
}

TEST(Advance, Monotone) {
  Policy p = parsed(kGpuDefault);
  Minute now = 0;
  for (Minute s2 = 0; s2 <= 10 * kDay; s2 += 7 * kHour)
    for (Minute s1 = 0; s1 <= s2; s1 += 5 * kHour)
      if (check_advance(p, "student", now, s2).allowed) {
        EXPECT_TRUE(check_advance(p, "student", now, s1).allowed);
      }
}

TEST(PolicySet, EffectiveResolution) {
  PolicySet set;
  EXPECT_EQ(set.effective(gpu("l40s-cluster")).name, builtin_default_policy().name);
  set.install(parsed(kGpuDefault));
  EXPECT_EQ(set.effective(gpu("l40s-cluster")).name, "gpu-default");
  set.install(parsed("policy \"l40s\" { applies to resource \"l40s-cluster\"; }"));
  EXPECT_EQ(set.effective(gpu("l40s-cluster")).name, "l40s");
  EXPECT_EQ(set.effective(gpu("a16-cluster")).name, "gpu-default");
}

TEST(PolicySet, SameTargetIsAmbiguous) {
  PolicySet set;
  set.install(parsed(kGpuDefault));
  try {
    set.install(parsed("policy \"other\" { applies to kind gpu; }"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ambiguous_policy);
  }
  // Reinstalling under the same name replaces.
  set.install(parsed("policy \"gpu-default\" { applies to kind gpu; max_duration 1h; }"));
  EXPECT_EQ(set.find("gpu-default")->max_duration, 60);
}

TEST(PolicySet, UnvalidatedLoadDetectsConflict) {
  PolicySet set({parsed(kGpuDefault), parsed("policy \"b\" { applies to kind gpu; }")});
  EXPECT_THROW(set.validate(), Error);
}

TEST(PolicyBuiltin, Defaults) {
  const Policy& d = builtin_default_policy();
  ASSERT_EQ(d.tiers.size(), 1u);
  EXPECT_EQ(d.tiers[0], (Tier{"default", 14 * kDay, 1}));
  EXPECT_EQ(d.max_duration, kDay);
  EXPECT_EQ(d.contention, ContentionMode::queue);
  EXPECT_FALSE(d.reclaim_idle_after);
  EXPECT_TRUE(d.owner_reclaim);
}

TEST(PolicyTier, FallbackToLowest) {
  Policy p = parsed(kGpuDefault);
  EXPECT_EQ(p.tier_or_lowest("staff").name, "staff");
  EXPECT_EQ(p.tier_or_lowest("visitor").name, "student");
}
