#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "shary/policy/policy.hpp"

using namespace shary;
using namespace shary::policy;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<fs::path> cases(const std::string& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(fs::path(SHARY_GOLDEN_DIR) / "policy" / dir))
    if (e.path().extension() == ".policy") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Builds the expected policy from the compact hand-written form.
Policy expected_policy(const json& j) {
  Policy p;
  p.name = j["name"];
  std::string applies = j["applies"];
  auto colon = applies.find(':');
  p.applies_to.target = applies.substr(0, colon) == "kind" ? AppliesTo::Target::kind : AppliesTo::Target::resource;
  p.applies_to.value = applies.substr(colon + 1);
  for (const auto& t : j["tiers"]) p.tiers.push_back({t[0], t[1], t[2]});
  p.max_duration = j["max_duration"];
  if (!j["max_active"].is_null()) p.max_active = j["max_active"].get<int>();
  if (!j["reclaim"].is_null()) {
    p.reclaim_idle_after = j["reclaim"][0].get<Minute>();
    p.reclaim_grace = j["reclaim"][1];
  }
  if (j["contention"].is_array()) {
    p.contention = ContentionMode::auction;
    p.auction_deadline = j["contention"][1];
  }
  p.owner_reclaim = j["owner_reclaim"];
  return p;
}

}  // namespace

TEST(PolicyGolden, CorpusHasFiftyCases) { EXPECT_EQ(cases("valid").size() + cases("invalid").size(), 50u); }

TEST(PolicyGolden, ValidCasesMatchHandWrittenStructure) {
  for (const auto& path : cases("valid")) {
    SCOPED_TRACE(path.filename().string());
    auto r = parse_policy(slurp(path));
    ASSERT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : to_string(r.diagnostics.front()));
    fs::path exp = path;
    exp.replace_extension(".expected.json");
    EXPECT_EQ(*r.policy, expected_policy(json::parse(slurp(exp))));
  }
}

TEST(PolicyGolden, ValidCasesRoundTrip) {
  for (const auto& path : cases("valid")) {
    SCOPED_TRACE(path.filename().string());
    Policy p = *parse_policy(slurp(path)).policy;
    auto again = parse_policy(pretty_print(p));
    ASSERT_TRUE(again.ok());
    EXPECT_EQ(*again.policy, p);
  }
}

TEST(PolicyGolden, InvalidCasesYieldPositionedDiagnostic) {
  for (const auto& path : cases("invalid")) {
    SCOPED_TRACE(path.filename().string());
    std::string src = slurp(path);
    auto r = parse_policy(src);
    ASSERT_FALSE(r.ok());
    ASSERT_FALSE(r.diagnostics.empty());
    fs::path exp = path;
    exp.replace_extension(".expected");
    std::string line = slurp(exp);
    line = line.substr(0, line.find('\n'));
    std::string pos = line.substr(0, line.find(' '));
    std::string msg = line.substr(line.find(' ') + 1);
    const auto& d = r.diagnostics.front();
    EXPECT_EQ(std::to_string(d.line) + ":" + std::to_string(d.column), pos) << d.message;
    EXPECT_NE(d.message.find(msg), std::string::npos) << d.message;
    EXPECT_GE(d.line, 1);
    EXPECT_GE(d.column, 1);
  }
}

TEST(PolicyFuzz, MutatedCorpusNeverCrashes) {
  std::vector<std::string> seeds;
  for (const auto& p : cases("valid")) seeds.push_back(slurp(p));
  std::mt19937 rng(7);
  for (int i = 0; i < 20000; ++i) {
    std::string s = seeds[rng() % seeds.size()];
    int edits = 1 + rng() % 4;
    for (int e = 0; e < edits && !s.empty(); ++e) {
      std::size_t at = rng() % s.size();
      switch (rng() % 3) {
        case 0: s[at] = static_cast<char>(rng() % 256); break;
        case 1: s.erase(at, 1 + rng() % 5); break;
        default: s.insert(at, 1, static_cast<char>(rng() % 256));
      }
    }
    auto r = parse_policy(s);
    EXPECT_TRUE(r.ok() || !r.diagnostics.empty());
  }
}
