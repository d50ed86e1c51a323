#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shary/catalog/catalog.hpp"
#include "shary/economy/economy.hpp"
#include "shary/policy/policy.hpp"
#include "shary/scheduler/scheduler.hpp"
#include "shary/service/notifications.hpp"
#include "shary/telemetry/telemetry.hpp"

namespace shary::service {

using nlohmann::json;

inline constexpr std::string_view kSystemActor = "system";

struct Command {
  std::string kind;
  json payload = json::object();
  std::string actor{kSystemActor};
  Minute ts = 0;
  std::string idempotency_key;
};

/// One accepted state change. `result` is the command's response document, re-checked on replay.
struct Event {
  std::uint64_t seq = 0;
  Minute ts = 0;
  std::string kind;
  json payload = json::object();
  std::string actor;
  std::string idempotency_key;
  json result;

  bool operator==(const Event&) const = default;
};

json to_json(const Event& e);
Event event_from_json(const json& j);

struct CommandResult {
  json document = json::object();
  std::uint64_t seq = 0;  // event appended for this command, 0 if nothing changed
  std::optional<scheduler::Rejection> rejection;
  std::vector<std::string> warnings;
  bool duplicate = false;  // answered from the idempotency table
};

struct PlatformConfig {
  scheduler::SchedulerConfig scheduler;
  std::uint64_t snapshot_every = 1000;

  bool operator==(const PlatformConfig&) const = default;
};

/// The whole system state behind one serialized command stream. Every command that changes state yields exactly
/// one event; replaying the events in order rebuilds an identical state.
class Platform {
 public:
  explicit Platform(PlatformConfig config = {});
  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;

  /// Runs due periodic work at cmd.ts (logged as its own tick event when it changed anything), then the
  /// command. Throws shary::Error for refused commands; nothing is logged for them.
  CommandResult execute(const Command& cmd);

  /// Called for every appended event, in seq order.
  void set_event_sink(std::function<void(const Event&)> sink) { sink_ = std::move(sink); }

  /// Re-executes one recorded event. Throws corrupt-log on a seq gap or a diverging result.
  void apply_event(const Event& e);
  /// Full replay, optionally starting from a snapshot taken at some earlier seq.
  static std::unique_ptr<Platform> replay(const std::vector<Event>& events, PlatformConfig config = {},
                                          const json* snapshot = nullptr);

  json snapshot() const;
  static std::unique_ptr<Platform> from_snapshot(const json& doc);

  std::uint64_t seq() const { return seq_; }
  Minute clock() const { return clock_; }
  const PlatformConfig& config() const { return config_; }
  const std::vector<Event>& events() const { return events_; }
  std::vector<Event> events_since(std::uint64_t seq, std::size_t limit = 0) const;
  /// Keeps events loaded from an existing log without re-executing them (state comes from a snapshot).
  void adopt_history(std::vector<Event> events);

  const catalog::Catalog& catalog() const { return catalog_; }
  const policy::PolicySet& policies() const { return policies_; }
  const economy::Economy& economy() const { return economy_; }
  const telemetry::Telemetry& telemetry() const { return telemetry_; }
  const scheduler::Scheduler& scheduler() const { return *scheduler_; }
  const NotificationCenter& notifications() const { return notifications_; }
  const std::map<std::string, UserRecord>& users() const { return users_; }
  const UserRecord* find_user(const std::string& name) const;

  /// Usage for a user (their reservations) or a resource (all reservations on it). Throws unknown-subject.
  telemetry::UsageReport usage_report(const std::string& subject, Interval window, Minute now) const;

 private:
  struct Outcome {
    json document = json::object();
    bool changed = true;
    std::optional<scheduler::Rejection> rejection;
    std::vector<std::string> warnings;
  };
  using Handler = Outcome (Platform::*)(const Command&, const scheduler::Actor&);

  CommandResult run(const Command& cmd);
  Outcome dispatch(const Command& cmd, const scheduler::Actor& actor);
  scheduler::Actor resolve(const std::string& actor) const;
  std::uint64_t append(const Command& cmd, const json& result);
  static json result_json(const Outcome& o);
  static CommandResult from_result(const json& result, std::uint64_t seq);

  Outcome do_user_register(const Command&, const scheduler::Actor&);
  Outcome do_driver_register(const Command&, const scheduler::Actor&);
  Outcome do_resource_register(const Command&, const scheduler::Actor&);
  Outcome do_resource_decommission(const Command&, const scheduler::Actor&);
  Outcome do_resource_reclaim(const Command&, const scheduler::Actor&);
  Outcome do_policy_install(const Command&, const scheduler::Actor&);
  Outcome do_reservation_request(const Command&, const scheduler::Actor&);
  Outcome do_reservation_force(const Command&, const scheduler::Actor&);
  Outcome do_reservation_cancel(const Command&, const scheduler::Actor&);
  Outcome do_reservation_release(const Command&, const scheduler::Actor&);
  Outcome do_batch_submit(const Command&, const scheduler::Actor&);
  Outcome do_auction_bid(const Command&, const scheduler::Actor&);
  Outcome do_offer_accept(const Command&, const scheduler::Actor&);
  Outcome do_offer_decline(const Command&, const scheduler::Actor&);
  Outcome do_telemetry_ingest(const Command&, const scheduler::Actor&);
  Outcome do_tokens_grant(const Command&, const scheduler::Actor&);
  Outcome do_notification_delivery(const Command&, const scheduler::Actor&);
  Outcome do_tick(const Command&, const scheduler::Actor&);

  static const std::map<std::string, Handler>& handlers();

  PlatformConfig config_;
  std::map<std::string, UserRecord> users_;
  catalog::Catalog catalog_;
  policy::PolicySet policies_;
  economy::Economy economy_;
  telemetry::Telemetry telemetry_;
  NotificationCenter notifications_{users_};
  std::unique_ptr<scheduler::Scheduler> scheduler_;

  struct Remembered {
    std::uint64_t seq = 0;
    json result;  // as recorded in the event
  };
  std::map<std::string, Remembered> idempotency_;

  std::uint64_t seq_ = 0;
  Minute clock_ = 0;
  std::vector<Event> events_;
  std::function<void(const Event&)> sink_;
  bool replaying_ = false;
};

}  // namespace shary::service
