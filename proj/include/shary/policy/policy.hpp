#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shary/catalog/catalog.hpp"
#include "shary/time.hpp"

namespace shary::policy {

struct Tier {
  std::string name;
  Minute advance = 0;  // maximum lead time between booking and slot start
  int rank = 1;        // lower rank = higher priority

  bool operator==(const Tier&) const = default;
};

struct AppliesTo {
  enum class Target { any, kind, resource };
  Target target = Target::any;
  std::string value;  // kind name or resource id

  bool operator==(const AppliesTo&) const = default;
};

enum class ContentionMode { queue, auction };

struct Policy {
  std::string name;
  AppliesTo applies_to;
  std::vector<Tier> tiers;
  Minute max_duration = kDay;
  std::optional<int> max_active;
  std::optional<Minute> reclaim_idle_after;
  Minute reclaim_grace = 15;
  ContentionMode contention = ContentionMode::queue;
  Minute auction_deadline = 0;
  bool owner_reclaim = true;

  const Tier* find_tier(std::string_view tier) const;
  /// The named tier, or the lowest-priority tier when the name is not declared.
  const Tier& tier_or_lowest(std::string_view tier) const;

  bool operator==(const Policy&) const = default;
};

/// Single tier "default" (14d, rank 1), 24h cap, queue contention, no idle reclaim, owners may reclaim.
const Policy& builtin_default_policy();

enum class Severity { error, warning };

struct ParseDiagnostic {
  int line = 1;
  int column = 1;
  std::string message;
  Severity severity = Severity::error;

  bool operator==(const ParseDiagnostic&) const = default;
};

std::string to_string(const ParseDiagnostic& d);

struct ParseResult {
  std::optional<Policy> policy;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return policy.has_value(); }
};

/// Total: never throws, never crashes; on failure returns at least one positioned diagnostic.
ParseResult parse_policy(std::string_view source);

/// Canonical DSL text; parse_policy(pretty_print(p)) yields a policy equal to p.
std::string pretty_print(const Policy& policy);

struct AdvanceDecision {
  bool allowed = false;
  std::string reason;
};

/// Allowed iff start - now <= tier.advance (inclusive). Throws unknown-tier.
AdvanceDecision check_advance(const Policy& policy, std::string_view tier, Minute now, Minute start);

/// Installed policies, keyed by name. At most one policy per target.
class PolicySet {
 public:
  PolicySet() = default;
  /// Loads policies without the per-target check; call validate() before use.
  explicit PolicySet(std::vector<Policy> policies);

  /// Throws ambiguous-policy if two policies share a target.
  void validate() const;

  /// Replaces a same-named policy. Throws ambiguous-policy when another policy already claims the target.
  void install(Policy policy);
  bool remove(const std::string& name);

  /// Explicit-resource policy, else kind policy, else the built-in default. Throws ambiguous-policy.
  const Policy& effective(const catalog::ResourceDescriptor& resource) const;

  const Policy* find(const std::string& name) const;
  std::vector<Policy> list() const;
  std::size_t size() const { return policies_.size(); }

  bool operator==(const PolicySet&) const = default;

 private:
  std::map<std::string, Policy> policies_;
};

}  // namespace shary::policy
