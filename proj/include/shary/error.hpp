#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shary {

enum class ErrorCode {
  // catalog
  duplicate_id,
  unknown_driver,
  invalid_units,
  unknown_id,
  invalid_descriptor,
  // policy
  parse_error,
  ambiguous_policy,
  unknown_tier,
  // scheduler
  unknown_resource,
  retired_resource,
  misaligned_interval,
  interval_in_past,
  capacity_exceeded,
  advance_denied,
  duration_exceeded,
  max_active_exceeded,
  invalid_state,
  forbidden_actor,
  at_outside_interval,
  no_matching_kind,
  deadline_infeasible,
  overlap,
  unknown_offer,
  offer_unavailable,
  owner_reclaim_denied,
  no_queued_request,
  // economy
  already_accrued,
  zero_reserved,
  not_released,
  not_preempted,
  already_compensated,
  unknown_auction,
  auction_closed,
  insufficient_tokens,
  non_positive_bid,
  already_settled,
  not_yet_deadline,
  // telemetry
  out_of_order_timestamp,
  out_of_range_utilization,
  invalid_sample,
  window_too_short,
  unknown_subject,
  // broker / drivers
  driver_unreachable,
  no_grant,
  unit_already_attached,
  unknown_instance,
  unknown_remote,
  unknown_project,
  unknown_profile,
  unknown_verb,
  duplicate_name,
  // service
  unknown_user,
  unauthorized,
  forbidden,
  invalid_request,
  corrupt_log,
  bind_failure,
};

/// Stable kebab-case name used on the wire ("misaligned-interval").
std::string_view to_string(ErrorCode code);
bool parse_error_code(std::string_view text, ErrorCode& out);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  explicit Error(ErrorCode code) : Error(code, std::string(to_string(code))) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace shary
