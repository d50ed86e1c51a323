#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "shary/catalog/catalog.hpp"
#include "shary/error.hpp"

using namespace shary;
using namespace shary::catalog;
using nlohmann::json;

namespace {

Catalog seed_catalog() {
  std::ifstream in(std::string(SHARY_DATA_DIR) + "/seed_catalog.json");
  json doc = json::parse(in);
  Catalog c;
  for (const char* d : {"figo", "sup4rnet", "nic-catalog"}) c.add_driver(d);
  for (auto& d : descriptors_from_json(doc)) c.register_resource(d);
  return c;
}

std::vector<std::string> ids(const std::vector<ResourceDescriptor>& list) {
  std::vector<std::string> out;
  for (const auto& d : list) out.push_back(d.id);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::invalid_request;
}

}  // namespace

TEST(Catalog, RegisterTofinoFromTestbedInventory) {
  Catalog c;
  c.add_driver("sup4rnet");
  json doc = {{"id", "tofino-1"},
              {"kind", "p4-switch"},
              {"site", "torino"},
              {"units", 1},
              {"driver", "sup4rnet"},
              {"attributes", {{"model", "Edgecore Wedge 100BF-32X"}, {"ports", "32"}, {"link", "100Gbps"}}}};
  EXPECT_EQ(c.register_resource(descriptor_from_json(doc)), "tofino-1");
  EXPECT_EQ(c.get("tofino-1").attributes.at("ports"), "32");
  EXPECT_TRUE(c.get("tofino-1").is_shared());
  EXPECT_EQ(code_of([&] { c.register_resource(descriptor_from_json(doc)); }), ErrorCode::duplicate_id);
}

TEST(Catalog, RegistrationErrors) {
  Catalog c;
  c.add_driver("figo");
  ResourceDescriptor d{"x", ResourceKind::gpu, "roma", 0, {}, "shared", "figo"};
  EXPECT_EQ(code_of([&] { c.register_resource(d); }), ErrorCode::invalid_units);
  d.units = 2;
  d.driver = "nope";
  EXPECT_EQ(code_of([&] { c.register_resource(d); }), ErrorCode::unknown_driver);
  EXPECT_TRUE(c.empty());
}

TEST(Catalog, DescriptorDocumentRejectsUnknownKeys) {
  json doc = {{"id", "x"}, {"kind", "gpu"}, {"site", "roma"}, {"units", 1}, {"driver", "figo"}, {"color", "red"}};
  EXPECT_EQ(code_of([&] { descriptor_from_json(doc); }), ErrorCode::invalid_descriptor);
  doc.erase("color");
  doc.erase("site");
  EXPECT_EQ(code_of([&] { descriptor_from_json(doc); }), ErrorCode::invalid_descriptor);
}

TEST(Catalog, DescriptorJsonRoundTrip) {
  ResourceDescriptor d{"a16-cluster", ResourceKind::gpu, "roma", 4, {{"model", "NVIDIA A16"}}, "polito", "figo"};
  EXPECT_EQ(descriptor_from_json(descriptor_to_json(d)), d);
}

TEST(Catalog, SeedFilterByKind) {
  Catalog c = seed_catalog();
  ResourceFilter f;
  f.kind = ResourceKind::gpu;
  EXPECT_EQ(ids(c.list(f)), (std::vector<std::string>{"a16-cluster", "l40s-cluster"}));
}

TEST(Catalog, SeedFilterBySite) {
  Catalog c = seed_catalog();
  ResourceFilter f;
  f.site = "torino";
  // Hand-enumerated from the fixture: two switches plus six smart-NIC entries.
  EXPECT_EQ(ids(c.list(f)), (std::vector<std::string>{"a30x", "alveo-u45n", "bluefield2", "connectx7", "ipu-f2000x",
                                                       "tofino-1", "tofino-2", "vck5000"}));
}

TEST(Catalog, ListIsOrderedAndPure) {
  Catalog c = seed_catalog();
  auto a = c.list(), b = c.list();
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](auto& x, auto& y) { return x.id < y.id; }));
  EXPECT_TRUE(Catalog{}.list().empty());
}

TEST(Catalog, DecommissionKeepsRecord) {
  Catalog c = seed_catalog();
  c.decommission("tofino-1");
  EXPECT_TRUE(c.get("tofino-1").retired);
  EXPECT_EQ(c.list().size(), 9u);
  ResourceFilter f;
  f.include_retired = true;
  EXPECT_EQ(c.list(f).size(), 10u);
  EXPECT_EQ(code_of([&] { c.decommission("nope"); }), ErrorCode::unknown_id);
}

TEST(Catalog, OwnerAndAttributesAreMutable) {
  Catalog c = seed_catalog();
  c.set_owner("tofino-2", "polito");
  c.set_attributes("tofino-2", {{"model", "x"}});
  EXPECT_EQ(c.get("tofino-2").owner, "polito");
  EXPECT_EQ(c.get("tofino-2").attributes.size(), 1u);
  ResourceFilter f;
  f.owner = "polito";
  EXPECT_EQ(ids(c.list(f)), std::vector<std::string>{"tofino-2"});
}

TEST(Catalog, UnitsMaterialized) {
  Catalog c = seed_catalog();
  auto units = c.units_of("l40s-cluster");
  ASSERT_EQ(units.size(), 4u);
  EXPECT_EQ(units[3].index, 3);
  EXPECT_EQ(units[0].resource, "l40s-cluster");
}
