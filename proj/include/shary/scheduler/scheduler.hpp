#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shary/catalog/catalog.hpp"
#include "shary/economy/economy.hpp"
#include "shary/error.hpp"
#include "shary/policy/policy.hpp"
#include "shary/scheduler/calendar.hpp"
#include "shary/scheduler/reservation.hpp"
#include "shary/telemetry/telemetry.hpp"

namespace shary::scheduler {

using OfferId = std::uint64_t;

enum class NoticeKind { offer, preemption_warning, preempted, cancellation, auction_result, confirmation, expiry };
std::string_view to_string(NoticeKind k);
std::optional<NoticeKind> parse_notice_kind(std::string_view text);

struct Notice {
  std::string user;
  NoticeKind kind = NoticeKind::confirmation;
  std::string subject;
  std::string body;
};

/// Receives user-facing notices raised while a command executes.
class Notifier {
 public:
  virtual ~Notifier() = default;
  virtual void notify(const Notice& notice, Minute now) = 0;
};

struct SchedulerConfig {
  /// Promotion of queued requests and last-minute offers on freed capacity. Off = static calendar.
  bool dynamic_reallocation = true;
  Minute offer_ttl = 30;
  Minute offer_horizon = kDay;

  bool operator==(const SchedulerConfig&) const = default;
};

struct ReservationRequest {
  std::string user;
  std::string tier;
  std::string resource;
  int unit_count = 1;
  Interval interval;
  SessionMode mode = SessionMode::interactive;
  std::optional<economy::Tokens> bid;
};

struct BatchRequest {
  std::string user;
  std::string tier;
  catalog::ResourceKind kind = catalog::ResourceKind::gpu;
  int unit_count = 1;
  Minute duration = 0;
  std::optional<Minute> deadline;  // latest completion time
};

struct Rejection {
  ErrorCode code = ErrorCode::invalid_request;
  std::string message;
};

struct RequestOutcome {
  std::optional<Reservation> reservation;
  std::optional<Rejection> rejection;
  std::optional<Rejection> bid_rejection;  // request queued but the attached bid was refused
  std::vector<std::string> warnings;

  bool accepted() const { return reservation.has_value(); }
};

/// A request that was refused but may still want capacity freed later.
struct RejectedRequest {
  std::string user;
  std::string tier;
  int tier_rank = 1;
  std::string resource;
  Interval interval;
  int unit_count = 1;
  Minute created_at = 0;
  ErrorCode reason = ErrorCode::invalid_request;

  bool operator==(const RejectedRequest&) const = default;
};

enum class OfferState { open, accepted, expired, superseded };
std::string_view to_string(OfferState s);
std::optional<OfferState> parse_offer_state(std::string_view text);

struct OfferCandidate {
  std::string user;
  std::string tier;
  int tier_rank = 1;
  Minute created_at = 0;
  Interval want;
  int unit_count = 1;
  std::optional<ReservationId> source;  // queued request behind the candidacy

  bool operator==(const OfferCandidate&) const = default;
};

struct LastMinuteOffer {
  OfferId id = 0;
  std::uint64_t chain = 0;  // one freed window; at most one open offer per chain
  std::string resource;
  Interval freed;
  std::vector<int> freed_units;
  Interval window;         // offered slice of the freed window
  std::vector<int> units;  // offered units
  OfferCandidate candidate;
  std::vector<OfferCandidate> remaining;
  Minute issued_at = 0;
  Minute ttl = 30;
  OfferState state = OfferState::open;
  std::optional<ReservationId> accepted_reservation;

  bool operator==(const LastMinuteOffer&) const = default;
};

enum class PreemptionCause { idle, owner };
std::string_view to_string(PreemptionCause c);

struct PendingPreemption {
  ReservationId reservation = 0;
  PreemptionCause cause = PreemptionCause::idle;
  Minute scheduled_at = 0;
  Minute fire_at = 0;

  bool operator==(const PendingPreemption&) const = default;
};

struct PreemptionAction {
  enum class Phase { scheduled, fired, cancelled };
  ReservationId reservation = 0;
  PreemptionCause cause = PreemptionCause::idle;
  Phase phase = Phase::scheduled;
  Minute fire_at = 0;
};
std::string_view to_string(PreemptionAction::Phase p);

struct TickReport {
  std::vector<ReservationId> activated, completed, expired, promoted, preempted, placed;
  std::vector<OfferId> offers_issued, offers_expired, offers_superseded;
  std::vector<economy::AuctionId> auctions_settled, auctions_voided;
  std::vector<PreemptionAction> reclaim;
  std::size_t housekeeping = 0;  // stale rejections and preemptions dropped

  bool empty() const;
};

/// Everything the scheduler persists. Calendars are indexes rebuilt from `reservations`.
struct SchedulerState {
  std::map<ReservationId, Reservation> reservations;
  std::map<OfferId, LastMinuteOffer> offers;
  std::vector<RejectedRequest> rejections;
  std::map<ReservationId, PendingPreemption> preemptions;
  ReservationId next_reservation = 1;
  OfferId next_offer = 1;
  std::uint64_t next_chain = 1;

  bool operator==(const SchedulerState&) const = default;
};

/// The calendar core. The scheduler reads the catalog, policies and telemetry, credits the economy, and
/// raises notices; it never mutates the catalog.
class Scheduler {
 public:
  Scheduler(SchedulerConfig config, const catalog::Catalog& catalog, const policy::PolicySet& policies,
            economy::Economy& economy, const telemetry::Telemetry& telemetry, Notifier& notifier);

  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;

  const SchedulerConfig& config() const { return config_; }

  // --- admission -----------------------------------------------------------------
  RequestOutcome request_reservation(const ReservationRequest& req, Minute now);
  RequestOutcome submit_batch(const BatchRequest& req, Minute now);
  /// Operator edit applied verbatim: policy checks are bypassed (reported as a warning), overlap is not.
  RequestOutcome force_reservation(const std::string& user, const std::string& resource, std::vector<int> units,
                                   Interval interval, Minute now);

  // --- queries -------------------------------------------------------------------
  /// Confirmed/active reservations intersecting `iv` (half-open). Throws unknown-resource.
  std::vector<Reservation> find_conflicts(const std::string& resource, Interval iv) const;
  /// Per unit, the maximal free intervals inside `window`. Throws unknown-resource.
  std::vector<std::vector<Interval>> availability(const std::string& resource, Interval window) const;

  // --- lifecycle -----------------------------------------------------------------
  void cancel_reservation(ReservationId id, const Actor& actor, Minute now);
  /// Returns the freed interval [align_up(at), end). Throws unknown-id, invalid-state, at-outside-interval.
  Interval release_early(ReservationId id, Minute at, const Actor& actor, Minute now);
  /// Drains queued requests for the resource in (tier rank, created_at) order.
  std::vector<ReservationId> promote_queued(const std::string& resource, Minute now);

  // --- last-minute offers --------------------------------------------------------
  std::vector<LastMinuteOffer> generate_offers(Interval freed, const std::string& resource, std::vector<int> units,
                                               Minute now, const std::string& exclude_user = {},
                                               const std::optional<OfferCandidate>& first = std::nullopt);
  Reservation accept_offer(OfferId id, const Actor& actor, Minute now);
  void decline_offer(OfferId id, const Actor& actor, Minute now);

  // --- reclaim -------------------------------------------------------------------
  std::vector<PreemptionAction> reclaim_scan(Minute now, std::size_t* dropped = nullptr);
  std::vector<PreemptionAction> owner_reclaim(const std::string& resource, const Actor& actor, Minute now);

  // --- auctions ------------------------------------------------------------------
  /// Requires a queued request attached to the auction. Throws no-queued-request plus economy errors.
  void place_bid(economy::AuctionId id, const std::string& user, economy::Tokens amount, Minute now);
  /// Settles one auction: the best eligible bidder's queued request is confirmed and pays.
  std::optional<economy::Bid> settle_auction(economy::AuctionId id, Minute now);

  /// Cancels confirmed and queued reservations on a retired resource, voids its auctions.
  std::vector<ReservationId> on_decommission(const std::string& resource, Minute now);

  /// Periodic work: activation, completion, expiry, auction settlement, reclaim, offer expiry, batch placement.
  TickReport tick(Minute now);

  // --- state ---------------------------------------------------------------------
  const Reservation* find(ReservationId id) const;
  const Reservation& get(ReservationId id) const;
  const std::map<ReservationId, Reservation>& reservations() const { return state_.reservations; }
  const std::map<OfferId, LastMinuteOffer>& offers() const { return state_.offers; }
  const std::vector<RejectedRequest>& rejections() const { return state_.rejections; }
  const std::map<ReservationId, PendingPreemption>& preemptions() const { return state_.preemptions; }
  const SchedulerState& state() const { return state_; }
  void restore(SchedulerState state);

 private:
  Reservation& mutable_get(ReservationId id);
  ResourceCalendar& calendar(const std::string& resource);
  const ResourceCalendar* find_calendar(const std::string& resource) const;
  std::vector<int> free_units(const std::string& resource, Interval iv) const;

  std::optional<Rejection> admission_checks(const catalog::ResourceDescriptor& desc, const policy::Policy& policy,
                                            const policy::Tier& tier, const std::string& user, int unit_count,
                                            Interval iv, Minute now) const;
  int holding_count(const std::string& user, const std::string& policy_name) const;
  void record_rejection(const std::string& user, const policy::Tier& tier, const std::string& resource, Interval iv,
                        int unit_count, ErrorCode reason, Minute now);

  void transition(Reservation& r, ReservationState to, Minute now);
  void hold(Reservation& r, const std::string& resource, std::vector<int> units, Interval iv, Minute now);
  /// Shrinks the interval to [start, new_end) and drops the booking from the calendar.
  void truncate(Reservation& r, Minute new_end);
  void unhold(Reservation& r);
  void settle_usage(Reservation& r, Minute now);
  void capacity_freed(const std::string& resource, Interval freed, const std::vector<int>& units, Minute now,
                      const std::string& exclude_user, const std::optional<OfferCandidate>& first = std::nullopt);

  void notify(const std::string& user, NoticeKind kind, std::string subject, std::string body, Minute now);

  // offers
  std::vector<OfferCandidate> offer_candidates(const std::string& resource, Interval window,
                                               const std::string& exclude_user) const;
  bool issue_next_offer(LastMinuteOffer proto, Minute now, std::vector<LastMinuteOffer>* issued);
  void expire_offers(Minute now, TickReport& report);
  void supersede_offers(Minute now, TickReport& report);

  // reclaim
  bool fire_preemption(ReservationId id, Minute now, TickReport* report);
  Minute reservation_idle_streak(const Reservation& r, Minute now) const;

  // batch
  struct Placement {
    std::string resource;
    Minute start = 0;
    std::vector<int> units;
    const policy::Policy* policy = nullptr;
    const policy::Tier* tier = nullptr;
  };
  std::optional<Placement> first_fit(const std::string& tier, catalog::ResourceKind kind, int unit_count,
                                     Minute duration, Minute now, bool* any_duration_ok) const;
  std::optional<Minute> earliest_start(const std::string& resource, int unit_count, Minute duration, Minute from,
                                       Minute latest) const;
  void place_floating(Minute now, TickReport& report);

  std::vector<economy::AuctionId> due_auctions(Minute now) const;

  SchedulerConfig config_;
  const catalog::Catalog& catalog_;
  const policy::PolicySet& policies_;
  economy::Economy& economy_;
  const telemetry::Telemetry& telemetry_;
  Notifier& notifier_;

  SchedulerState state_;
  std::map<std::string, ResourceCalendar> calendars_;
};

}  // namespace shary::scheduler
