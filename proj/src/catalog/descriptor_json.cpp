#include "shary/catalog/catalog.hpp"

#include "shary/error.hpp"

namespace shary::catalog {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::invalid_descriptor, what); }

std::string required_string(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) invalid(std::string("missing required key '") + key + "'");
  if (!it->is_string()) invalid(std::string("key '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

ResourceDescriptor descriptor_from_json(const json& doc) {
  if (!doc.is_object()) invalid("resource descriptor must be a JSON object");
  static const std::set<std::string> kKnown{"id", "kind", "site", "units", "driver", "attributes", "owner"};
  for (const auto& [key, value] : doc.items())
    if (!kKnown.count(key)) invalid("unknown key '" + key + "'");

  ResourceDescriptor d;
  d.id = required_string(doc, "id");
  const auto kind = required_string(doc, "kind");
  auto parsed = parse_kind(kind);
  if (!parsed) invalid("unknown kind '" + kind + "'");
  d.kind = *parsed;
  d.site = required_string(doc, "site");
  d.driver = required_string(doc, "driver");

  auto units = doc.find("units");
  if (units == doc.end()) invalid("missing required key 'units'");
  if (!units->is_number_integer()) invalid("key 'units' must be an integer");
  const auto n = units->get<std::int64_t>();
  if (n <= 0) throw Error(ErrorCode::invalid_units, "units must be >= 1, got " + std::to_string(n));
  if (n > 1 << 20) throw Error(ErrorCode::invalid_units, "units out of range");
  d.units = static_cast<int>(n);

  if (auto attrs = doc.find("attributes"); attrs != doc.end()) {
    if (!attrs->is_object()) invalid("key 'attributes' must be an object");
    for (const auto& [key, value] : attrs->items()) {
      if (!value.is_string()) invalid("attribute '" + key + "' must be a string");
      d.attributes[key] = value.get<std::string>();
    }
  }
  if (auto owner = doc.find("owner"); owner != doc.end()) {
    if (!owner->is_string() || owner->get<std::string>().empty()) invalid("key 'owner' must be a non-empty string");
    d.owner = owner->get<std::string>();
  }
  return d;
}

json descriptor_to_json(const ResourceDescriptor& d) {
  json attrs = json::object();
  for (const auto& [k, v] : d.attributes) attrs[k] = v;
  return json{{"id", d.id},         {"kind", to_string(d.kind)}, {"site", d.site},    {"units", d.units},
              {"attributes", attrs}, {"owner", d.owner},          {"driver", d.driver}};
}

std::vector<ResourceDescriptor> descriptors_from_json(const json& doc) {
  if (!doc.is_array()) invalid("catalog document must be a JSON array of descriptors");
  std::vector<ResourceDescriptor> out;
  for (const auto& item : doc) out.push_back(descriptor_from_json(item));
  return out;
}

}  // namespace shary::catalog
