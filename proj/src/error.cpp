#include "shary/error.hpp"

#include <array>
#include <utility>

namespace shary {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 57> kNames{{
    {ErrorCode::duplicate_id, "duplicate-id"},
    {ErrorCode::unknown_driver, "unknown-driver"},
    {ErrorCode::invalid_units, "invalid-units"},
    {ErrorCode::unknown_id, "unknown-id"},
    {ErrorCode::invalid_descriptor, "invalid-descriptor"},
    {ErrorCode::parse_error, "parse-error"},
    {ErrorCode::ambiguous_policy, "ambiguous-policy"},
    {ErrorCode::unknown_tier, "unknown-tier"},
    {ErrorCode::unknown_resource, "unknown-resource"},
    {ErrorCode::retired_resource, "retired-resource"},
    {ErrorCode::misaligned_interval, "misaligned-interval"},
    {ErrorCode::interval_in_past, "interval-in-past"},
    {ErrorCode::capacity_exceeded, "capacity-exceeded"},
    {ErrorCode::advance_denied, "advance-denied"},
    {ErrorCode::duration_exceeded, "duration-exceeded"},
    {ErrorCode::max_active_exceeded, "max-active-exceeded"},
    {ErrorCode::invalid_state, "invalid-state"},
    {ErrorCode::forbidden_actor, "forbidden-actor"},
    {ErrorCode::at_outside_interval, "at-outside-interval"},
    {ErrorCode::no_matching_kind, "no-matching-kind"},
    {ErrorCode::deadline_infeasible, "deadline-infeasible"},
    {ErrorCode::overlap, "overlap"},
    {ErrorCode::unknown_offer, "unknown-offer"},
    {ErrorCode::offer_unavailable, "offer-unavailable"},
    {ErrorCode::owner_reclaim_denied, "owner-reclaim-denied"},
    {ErrorCode::no_queued_request, "no-queued-request"},
    {ErrorCode::already_accrued, "already-accrued"},
    {ErrorCode::zero_reserved, "zero-reserved"},
    {ErrorCode::not_released, "not-released"},
    {ErrorCode::not_preempted, "not-preempted"},
    {ErrorCode::already_compensated, "already-compensated"},
    {ErrorCode::unknown_auction, "unknown-auction"},
    {ErrorCode::auction_closed, "auction-closed"},
    {ErrorCode::insufficient_tokens, "insufficient-tokens"},
    {ErrorCode::non_positive_bid, "non-positive-bid"},
    {ErrorCode::already_settled, "already-settled"},
    {ErrorCode::not_yet_deadline, "not-yet-deadline"},
    {ErrorCode::out_of_order_timestamp, "out-of-order-timestamp"},
    {ErrorCode::out_of_range_utilization, "out-of-range-utilization"},
    {ErrorCode::invalid_sample, "invalid-sample"},
    {ErrorCode::window_too_short, "window-too-short"},
    {ErrorCode::unknown_subject, "unknown-subject"},
    {ErrorCode::driver_unreachable, "driver-unreachable"},
    {ErrorCode::no_grant, "no-grant"},
    {ErrorCode::unit_already_attached, "unit-already-attached"},
    {ErrorCode::unknown_instance, "unknown-instance"},
    {ErrorCode::unknown_remote, "unknown-remote"},
    {ErrorCode::unknown_project, "unknown-project"},
    {ErrorCode::unknown_profile, "unknown-profile"},
    {ErrorCode::unknown_verb, "unknown-verb"},
    {ErrorCode::duplicate_name, "duplicate-name"},
    {ErrorCode::unknown_user, "unknown-user"},
    {ErrorCode::unauthorized, "unauthorized"},
    {ErrorCode::forbidden, "forbidden"},
    {ErrorCode::invalid_request, "invalid-request"},
    {ErrorCode::corrupt_log, "corrupt-log"},
    {ErrorCode::bind_failure, "bind-failure"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames)
    if (c == code) return name;
  return "internal";
}

bool parse_error_code(std::string_view text, ErrorCode& out) {
  for (const auto& [c, name] : kNames) {
    if (name == text) {
      out = c;
      return true;
    }
  }
  return false;
}

}  // namespace shary
