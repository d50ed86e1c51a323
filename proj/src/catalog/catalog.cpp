#include "shary/catalog/catalog.hpp"

#include "shary/error.hpp"

namespace shary::catalog {

std::string_view to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::gpu: return "gpu";
    case ResourceKind::p4_switch: return "p4-switch";
    case ResourceKind::smartnic: return "smartnic";
    case ResourceKind::compute: return "compute";
  }
  return "compute";
}

std::optional<ResourceKind> parse_kind(std::string_view text) {
  if (text == "gpu") return ResourceKind::gpu;
  if (text == "p4-switch") return ResourceKind::p4_switch;
  if (text == "smartnic") return ResourceKind::smartnic;
  if (text == "compute") return ResourceKind::compute;
  return std::nullopt;
}

bool ResourceFilter::matches(const ResourceDescriptor& d) const {
  if (!include_retired && d.retired) return false;
  if (kind && d.kind != *kind) return false;
  if (site && d.site != *site) return false;
  if (owner && d.owner != *owner) return false;
  return true;
}

const std::string& Catalog::register_resource(ResourceDescriptor descriptor) {
  if (descriptor.id.empty()) throw Error(ErrorCode::invalid_descriptor, "resource id must not be empty");
  if (descriptor.site.empty()) throw Error(ErrorCode::invalid_descriptor, "resource site must not be empty");
  if (resources_.count(descriptor.id))
    throw Error(ErrorCode::duplicate_id, "resource '" + descriptor.id + "' already enrolled");
  if (descriptor.units <= 0)
    throw Error(ErrorCode::invalid_units, "units must be >= 1, got " + std::to_string(descriptor.units));
  if (!has_driver(descriptor.driver))
    throw Error(ErrorCode::unknown_driver, "driver '" + descriptor.driver + "' is not registered");
  if (descriptor.owner.empty()) descriptor.owner = std::string(kSharedOwner);
  descriptor.retired = false;
  auto [it, inserted] = resources_.emplace(descriptor.id, std::move(descriptor));
  return it->first;
}

std::vector<ResourceDescriptor> Catalog::list(const ResourceFilter& filter) const {
  std::vector<ResourceDescriptor> out;
  for (const auto& [id, d] : resources_)
    if (filter.matches(d)) out.push_back(d);
  return out;
}

void Catalog::decommission(const std::string& id) {
  auto it = resources_.find(id);
  if (it == resources_.end()) throw Error(ErrorCode::unknown_id, "no resource '" + id + "'");
  if (it->second.retired) throw Error(ErrorCode::invalid_state, "resource '" + id + "' is already retired");
  it->second.retired = true;
}

void Catalog::set_owner(const std::string& id, std::string owner) {
  auto it = resources_.find(id);
  if (it == resources_.end()) throw Error(ErrorCode::unknown_id, "no resource '" + id + "'");
  it->second.owner = owner.empty() ? std::string(kSharedOwner) : std::move(owner);
}

void Catalog::set_attributes(const std::string& id, std::map<std::string, std::string> attributes) {
  auto it = resources_.find(id);
  if (it == resources_.end()) throw Error(ErrorCode::unknown_id, "no resource '" + id + "'");
  it->second.attributes = std::move(attributes);
}

const ResourceDescriptor* Catalog::find(const std::string& id) const {
  auto it = resources_.find(id);
  return it == resources_.end() ? nullptr : &it->second;
}

const ResourceDescriptor& Catalog::get(const std::string& id) const {
  if (const auto* d = find(id)) return *d;
  throw Error(ErrorCode::unknown_resource, "no resource '" + id + "'");
}

std::vector<ResourceUnit> Catalog::units_of(const std::string& id) const {
  const auto& d = get(id);
  std::vector<ResourceUnit> out;
  out.reserve(static_cast<std::size_t>(d.units));
  for (int i = 0; i < d.units; ++i) out.push_back({d.id, i});
  return out;
}

}  // namespace shary::catalog
