#include "shary/policy/policy.hpp"

#include <algorithm>
#include <iterator>

#include "shary/error.hpp"

namespace shary::policy {

const Tier* Policy::find_tier(std::string_view tier) const {
  for (const auto& t : tiers)
    if (t.name == tier) return &t;
  return nullptr;
}

const Tier& Policy::tier_or_lowest(std::string_view tier) const {
  if (const Tier* t = find_tier(tier)) return *t;
  return *std::max_element(tiers.begin(), tiers.end(),
                           [](const Tier& a, const Tier& b) { return a.rank < b.rank; });
}

const Policy& builtin_default_policy() {
  static const Policy kDefault = [] {
    Policy p;
    p.name = "builtin-default";
    p.applies_to = {AppliesTo::Target::any, {}};
    p.tiers = {Tier{"default", 14 * kDay, 1}};
    p.max_duration = kDay;
    p.contention = ContentionMode::queue;
    p.owner_reclaim = true;
    return p;
  }();
  return kDefault;
}

std::string to_string(const ParseDiagnostic& d) {
  return std::to_string(d.line) + ":" + std::to_string(d.column) + ": " +
         (d.severity == Severity::error ? "error: " : "warning: ") + d.message;
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string pretty_print(const Policy& p) {
  std::string out = "policy " + quote(p.name) + " {\n";
  switch (p.applies_to.target) {
    case AppliesTo::Target::kind: out += "  applies to kind " + p.applies_to.value + ";\n"; break;
    case AppliesTo::Target::resource: out += "  applies to resource " + quote(p.applies_to.value) + ";\n"; break;
    case AppliesTo::Target::any: out += "  # applies to every resource without a more specific policy\n"; break;
  }
  for (const auto& t : p.tiers)
    out += "  tier " + quote(t.name) + " advance " + format_duration(t.advance) + " priority " +
           std::to_string(t.rank) + ";\n";
  out += "  max_duration " + format_duration(p.max_duration) + ";\n";
  if (p.max_active) out += "  max_active " + std::to_string(*p.max_active) + ";\n";
  if (p.reclaim_idle_after)
    out += "  reclaim if idle > " + format_duration(*p.reclaim_idle_after) + " grace " +
           format_duration(p.reclaim_grace) + ";\n";
  if (p.contention == ContentionMode::auction)
    out += "  on_contention auction deadline " + format_duration(p.auction_deadline) + ";\n";
  else
    out += "  on_contention queue;\n";
  out += std::string("  owner may_reclaim ") + (p.owner_reclaim ? "always" : "never") + ";\n";
  out += "}\n";
  return out;
}

AdvanceDecision check_advance(const Policy& policy, std::string_view tier, Minute now, Minute start) {
  const Tier* t = policy.find_tier(tier);
  if (!t) throw Error(ErrorCode::unknown_tier, "tier '" + std::string(tier) + "' not declared by policy '" +
                                                   policy.name + "'");
  if (start < now) return {false, "start is in the past"};
  if (start - now <= t->advance) return {true, {}};
  return {false, "advance window exceeded"};
}

PolicySet::PolicySet(std::vector<Policy> policies) {
  for (auto& p : policies) {
    std::string key = p.name;
    policies_.insert_or_assign(std::move(key), std::move(p));
  }
}

void PolicySet::validate() const {
  for (auto a = policies_.begin(); a != policies_.end(); ++a)
    for (auto b = std::next(a); b != policies_.end(); ++b)
      if (a->second.applies_to == b->second.applies_to)
        throw Error(ErrorCode::ambiguous_policy,
                    "policies '" + a->first + "' and '" + b->first + "' apply to the same target");
}

void PolicySet::install(Policy policy) {
  for (const auto& [name, existing] : policies_) {
    if (name != policy.name && existing.applies_to == policy.applies_to)
      throw Error(ErrorCode::ambiguous_policy,
                  "policy '" + name + "' already applies to the same target as '" + policy.name + "'");
  }
  std::string key = policy.name;
  policies_.insert_or_assign(std::move(key), std::move(policy));
}

bool PolicySet::remove(const std::string& name) { return policies_.erase(name) > 0; }

const Policy& PolicySet::effective(const catalog::ResourceDescriptor& resource) const {
  const Policy* by_id = nullptr;
  const Policy* by_kind = nullptr;
  const auto kind = std::string(catalog::to_string(resource.kind));
  for (const auto& [name, p] : policies_) {
    const Policy** slot = nullptr;
    if (p.applies_to.target == AppliesTo::Target::resource && p.applies_to.value == resource.id) slot = &by_id;
    if (p.applies_to.target == AppliesTo::Target::kind && p.applies_to.value == kind) slot = &by_kind;
    if (!slot) continue;
    if (*slot)
      throw Error(ErrorCode::ambiguous_policy, "policies '" + (*slot)->name + "' and '" + name +
                                                   "' both apply to resource '" + resource.id + "'");
    *slot = &p;
  }
  if (by_id) return *by_id;
  if (by_kind) return *by_kind;
  return builtin_default_policy();
}

const Policy* PolicySet::find(const std::string& name) const {
  auto it = policies_.find(name);
  return it == policies_.end() ? nullptr : &it->second;
}

std::vector<Policy> PolicySet::list() const {
  std::vector<Policy> out;
  for (const auto& [name, p] : policies_) out.push_back(p);
  return out;
}

}  // namespace shary::policy
