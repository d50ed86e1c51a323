#pragma once

// JSON forms of every persisted type. Timestamps are written as ISO strings and read back as either ISO strings
// or integer minutes. Each to_json/from_json pair round-trips byte-identically after dump().

#include <json.hpp>

#include "shary/catalog/catalog.hpp"
#include "shary/economy/economy.hpp"
#include "shary/policy/policy.hpp"
#include "shary/scheduler/scheduler.hpp"
#include "shary/service/notifications.hpp"
#include "shary/telemetry/telemetry.hpp"

namespace shary::service {

using nlohmann::json;

/// Accepts "YYYY-MM-DDTHH:MMZ" or an integer minute count. Throws invalid-request naming `field`.
Minute time_from_json(const json& j, const char* field = "time");
json time_to_json(Minute t);
json interval_to_json(const Interval& iv);
Interval interval_from_json(const json& j);

json to_json(const scheduler::Reservation& r);
scheduler::Reservation reservation_from_json(const json& j);
json to_json(const scheduler::OfferCandidate& c);
scheduler::OfferCandidate candidate_from_json(const json& j);
json to_json(const scheduler::LastMinuteOffer& o);
scheduler::LastMinuteOffer offer_from_json(const json& j);
json to_json(const scheduler::RejectedRequest& r);
scheduler::RejectedRequest rejected_from_json(const json& j);
json to_json(const scheduler::PendingPreemption& p);
scheduler::PendingPreemption preemption_from_json(const json& j);
json to_json(const scheduler::PreemptionAction& a);
json to_json(const scheduler::TickReport& t);
json to_json(const scheduler::Rejection& r);
json to_json(const scheduler::SchedulerState& s);
scheduler::SchedulerState scheduler_state_from_json(const json& j);
json to_json(const scheduler::SchedulerConfig& c);
scheduler::SchedulerConfig scheduler_config_from_json(const json& j);

json to_json(const economy::LedgerEntry& e);
economy::LedgerEntry entry_from_json(const json& j);
json to_json(const economy::Bid& b);
economy::Bid bid_from_json(const json& j);
json to_json(const economy::Auction& a);
economy::Auction auction_from_json(const json& j);
json to_json(const economy::Economy::State& s);
economy::Economy::State economy_state_from_json(const json& j);

json to_json(const telemetry::Telemetry& t);
/// Rebuilds by re-ingesting every stored point.
telemetry::Telemetry telemetry_from_json(const json& j);
json to_json(const telemetry::UsageReport& r);
telemetry::UtilizationSample sample_from_json(const json& j);
json to_json(const telemetry::UtilizationSample& s);

json to_json(const catalog::Catalog& c);
catalog::Catalog catalog_from_json(const json& j);

json to_json(const policy::Policy& p);  // {"name", "source"}
json to_json(const policy::PolicySet& s);
policy::PolicySet policies_from_json(const json& j);
json to_json(const policy::ParseDiagnostic& d);

json to_json(const UserRecord& u);
UserRecord user_from_json(const json& j);
json to_json(const Notification& n);
Notification notification_from_json(const json& j);

}  // namespace shary::service
