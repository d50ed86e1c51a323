#pragma once

#include <map>
#include <vector>

#include "shary/broker/grant.hpp"

namespace shary::broker {

inline constexpr Minute kRevocationGrace = 5;

/// Converges one driver's observed grants to the desired set. The only memory carried between passes is when
/// each session lost its grant, so that best-effort termination waits out the grace period.
class Reconciler {
 public:
  explicit Reconciler(Minute grace = kRevocationGrace) : grace_(grace) {}

  /// Pure: grants for desired minus observed, revokes for observed minus desired, then terminations for
  /// sessions whose grant has been gone for at least the grace period.
  std::vector<DriverAction> plan(const GrantSet& desired, const DriverSnapshot& observed, Minute now) const;

  /// Records the effect of the applied actions and of the observed sessions.
  void commit(const GrantSet& desired, const DriverSnapshot& observed, const std::vector<DriverAction>& applied,
              Minute now);

  const std::map<SessionKey, Minute>& pending() const { return revoked_at_; }
  void restore(std::map<SessionKey, Minute> pending) { revoked_at_ = std::move(pending); }
  Minute grace() const { return grace_; }

 private:
  Minute grace_;
  std::map<SessionKey, Minute> revoked_at_;
};

}  // namespace shary::broker
