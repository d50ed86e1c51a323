#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace shary::catalog {

enum class ResourceKind { gpu, p4_switch, smartnic, compute };

std::string_view to_string(ResourceKind kind);
std::optional<ResourceKind> parse_kind(std::string_view text);

inline constexpr std::string_view kSharedOwner = "shared";

/// An enrollable asset. `kind` and `driver` are fixed at enrollment.
struct ResourceDescriptor {
  std::string id;
  ResourceKind kind = ResourceKind::compute;
  std::string site;
  int units = 1;
  std::map<std::string, std::string> attributes;
  std::string owner{kSharedOwner};
  std::string driver;
  bool retired = false;

  bool is_shared() const { return owner == kSharedOwner; }
  bool operator==(const ResourceDescriptor&) const = default;
};

struct ResourceUnit {
  std::string resource;
  int index = 0;

  auto operator<=>(const ResourceUnit&) const = default;
};

/// Conjunctive filter; unset fields match everything.
struct ResourceFilter {
  std::optional<ResourceKind> kind;
  std::optional<std::string> site;
  std::optional<std::string> owner;
  bool include_retired = false;

  bool matches(const ResourceDescriptor& d) const;
};

class Catalog {
 public:
  /// Driver ids that descriptors may bind to.
  void add_driver(const std::string& driver_id) { drivers_.insert(driver_id); }
  bool has_driver(const std::string& driver_id) const { return drivers_.count(driver_id) != 0; }
  const std::set<std::string>& drivers() const { return drivers_; }

  /// Throws duplicate-id, unknown-driver, invalid-units, invalid-descriptor.
  const std::string& register_resource(ResourceDescriptor descriptor);

  /// Ordered by id.
  std::vector<ResourceDescriptor> list(const ResourceFilter& filter = {}) const;

  /// Marks the resource retired. The record is never removed.
  void decommission(const std::string& id);

  void set_owner(const std::string& id, std::string owner);
  void set_attributes(const std::string& id, std::map<std::string, std::string> attributes);

  /// Resolves retired resources too; nullptr if the id was never enrolled.
  const ResourceDescriptor* find(const std::string& id) const;
  /// Throws unknown-resource.
  const ResourceDescriptor& get(const std::string& id) const;

  std::vector<ResourceUnit> units_of(const std::string& id) const;

  std::size_t size() const { return resources_.size(); }
  bool empty() const { return resources_.empty(); }

  bool operator==(const Catalog&) const = default;

 private:
  std::map<std::string, ResourceDescriptor> resources_;
  std::set<std::string> drivers_;
};

// Descriptor document format: required id, kind, site, units, driver; optional attributes, owner.
// Unknown keys are rejected with invalid-descriptor.
ResourceDescriptor descriptor_from_json(const nlohmann::json& doc);
nlohmann::json descriptor_to_json(const ResourceDescriptor& d);

/// A JSON array of descriptor documents.
std::vector<ResourceDescriptor> descriptors_from_json(const nlohmann::json& doc);

}  // namespace shary::catalog
