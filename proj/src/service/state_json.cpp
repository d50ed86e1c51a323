#include "shary/service/state_json.hpp"

#include "shary/error.hpp"

namespace shary::service {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::invalid_request, msg); }

template <class T, class F>
T parse_enum(const json& j, F parse, const char* what) {
  if (!j.is_string()) bad(std::string(what) + " must be a string");
  auto v = parse(j.get<std::string>());
  if (!v) bad("unknown " + std::string(what) + " '" + j.get<std::string>() + "'");
  return *v;
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json();
}

json opt_time(const std::optional<Minute>& v) { return v ? time_to_json(*v) : json(); }

std::optional<Minute> opt_time_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return time_from_json(j.at(key), key);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

Minute time_from_json(const json& j, const char* field) {
  if (j.is_number_integer()) return j.get<Minute>();
  if (j.is_string()) {
    if (auto t = parse_iso(j.get<std::string>())) return *t;
    bad(std::string(field) + ": bad timestamp '" + j.get<std::string>() + "'");
  }
  bad(std::string(field) + " must be an ISO timestamp or integer minutes");
}

json time_to_json(Minute t) { return format_iso(t); }

json interval_to_json(const Interval& iv) { return {{"start", format_iso(iv.start)}, {"end", format_iso(iv.end)}}; }

Interval interval_from_json(const json& j) {
  return {time_from_json(j.at("start"), "start"), time_from_json(j.at("end"), "end")};
}

// --- scheduler ---------------------------------------------------------------------------------------------------

json to_json(const scheduler::Reservation& r) {
  return {{"id", r.id},
          {"user", r.user},
          {"tier", r.tier},
          {"tier_rank", r.tier_rank},
          {"policy", r.policy},
          {"resource", r.resource},
          {"kind", catalog::to_string(r.kind)},
          {"unit_count", r.unit_count},
          {"units", r.units},
          {"start", format_iso(r.interval.start)},
          {"end", format_iso(r.interval.end)},
          {"booked", interval_to_json(r.booked)},
          {"duration", r.duration},
          {"deadline", opt_time(r.deadline)},
          {"mode", scheduler::to_string(r.mode)},
          {"state", scheduler::to_string(r.state)},
          {"created_at", format_iso(r.created_at)},
          {"updated_at", format_iso(r.updated_at)},
          {"bid", opt(r.bid)},
          {"auction", opt(r.auction)}};
}

scheduler::Reservation reservation_from_json(const json& j) {
  scheduler::Reservation r;
  r.id = j.at("id").get<scheduler::ReservationId>();
  r.user = j.at("user").get<std::string>();
  r.tier = j.at("tier").get<std::string>();
  r.tier_rank = j.at("tier_rank").get<int>();
  r.policy = j.at("policy").get<std::string>();
  r.resource = j.at("resource").get<std::string>();
  r.kind = parse_enum<catalog::ResourceKind>(j.at("kind"), catalog::parse_kind, "kind");
  r.unit_count = j.at("unit_count").get<int>();
  r.units = j.at("units").get<std::vector<int>>();
  r.interval = {time_from_json(j.at("start")), time_from_json(j.at("end"))};
  r.booked = interval_from_json(j.at("booked"));
  r.duration = j.at("duration").get<Minute>();
  r.deadline = opt_time_from(j, "deadline");
  r.mode = parse_enum<scheduler::SessionMode>(j.at("mode"), scheduler::parse_mode, "mode");
  r.state = parse_enum<scheduler::ReservationState>(j.at("state"), scheduler::parse_state, "state");
  r.created_at = time_from_json(j.at("created_at"));
  r.updated_at = time_from_json(j.at("updated_at"));
  r.bid = opt_from<std::int64_t>(j, "bid");
  r.auction = opt_from<std::uint64_t>(j, "auction");
  return r;
}

json to_json(const scheduler::OfferCandidate& c) {
  return {{"user", c.user},
          {"tier", c.tier},
          {"tier_rank", c.tier_rank},
          {"created_at", format_iso(c.created_at)},
          {"want", interval_to_json(c.want)},
          {"unit_count", c.unit_count},
          {"source", opt(c.source)}};
}

scheduler::OfferCandidate candidate_from_json(const json& j) {
  return {j.at("user").get<std::string>(),      j.at("tier").get<std::string>(),
          j.at("tier_rank").get<int>(),         time_from_json(j.at("created_at")),
          interval_from_json(j.at("want")),     j.at("unit_count").get<int>(),
          opt_from<scheduler::ReservationId>(j, "source")};
}

json to_json(const scheduler::LastMinuteOffer& o) {
  json remaining = json::array();
  for (const auto& c : o.remaining) remaining.push_back(to_json(c));
  return {{"id", o.id},
          {"chain", o.chain},
          {"resource", o.resource},
          {"freed", interval_to_json(o.freed)},
          {"freed_units", o.freed_units},
          {"start", format_iso(o.window.start)},
          {"end", format_iso(o.window.end)},
          {"units", o.units},
          {"candidate", to_json(o.candidate)},
          {"user", o.candidate.user},
          {"remaining", remaining},
          {"issued_at", format_iso(o.issued_at)},
          {"expires_at", format_iso(o.issued_at + o.ttl)},
          {"ttl", o.ttl},
          {"state", scheduler::to_string(o.state)},
          {"accepted_reservation", opt(o.accepted_reservation)}};
}

scheduler::LastMinuteOffer offer_from_json(const json& j) {
  scheduler::LastMinuteOffer o;
  o.id = j.at("id").get<scheduler::OfferId>();
  o.chain = j.at("chain").get<std::uint64_t>();
  o.resource = j.at("resource").get<std::string>();
  o.freed = interval_from_json(j.at("freed"));
  o.freed_units = j.at("freed_units").get<std::vector<int>>();
  o.window = {time_from_json(j.at("start")), time_from_json(j.at("end"))};
  o.units = j.at("units").get<std::vector<int>>();
  o.candidate = candidate_from_json(j.at("candidate"));
  for (const auto& c : j.at("remaining")) o.remaining.push_back(candidate_from_json(c));
  o.issued_at = time_from_json(j.at("issued_at"));
  o.ttl = j.at("ttl").get<Minute>();
  o.state = parse_enum<scheduler::OfferState>(j.at("state"), scheduler::parse_offer_state, "offer state");
  o.accepted_reservation = opt_from<scheduler::ReservationId>(j, "accepted_reservation");
  return o;
}

json to_json(const scheduler::RejectedRequest& r) {
  return {{"user", r.user},
          {"tier", r.tier},
          {"tier_rank", r.tier_rank},
          {"resource", r.resource},
          {"interval", interval_to_json(r.interval)},
          {"unit_count", r.unit_count},
          {"created_at", format_iso(r.created_at)},
          {"reason", to_string(r.reason)}};
}

scheduler::RejectedRequest rejected_from_json(const json& j) {
  scheduler::RejectedRequest r;
  r.user = j.at("user").get<std::string>();
  r.tier = j.at("tier").get<std::string>();
  r.tier_rank = j.at("tier_rank").get<int>();
  r.resource = j.at("resource").get<std::string>();
  r.interval = interval_from_json(j.at("interval"));
  r.unit_count = j.at("unit_count").get<int>();
  r.created_at = time_from_json(j.at("created_at"));
  if (!parse_error_code(j.at("reason").get<std::string>(), r.reason)) bad("unknown rejection reason");
  return r;
}

json to_json(const scheduler::PendingPreemption& p) {
  return {{"reservation", p.reservation},
          {"cause", scheduler::to_string(p.cause)},
          {"scheduled_at", format_iso(p.scheduled_at)},
          {"fire_at", format_iso(p.fire_at)}};
}

scheduler::PendingPreemption preemption_from_json(const json& j) {
  scheduler::PendingPreemption p;
  p.reservation = j.at("reservation").get<scheduler::ReservationId>();
  p.cause = j.at("cause").get<std::string>() == "owner" ? scheduler::PreemptionCause::owner
                                                         : scheduler::PreemptionCause::idle;
  p.scheduled_at = time_from_json(j.at("scheduled_at"));
  p.fire_at = time_from_json(j.at("fire_at"));
  return p;
}

json to_json(const scheduler::PreemptionAction& a) {
  return {{"reservation", a.reservation},
          {"cause", scheduler::to_string(a.cause)},
          {"phase", scheduler::to_string(a.phase)},
          {"fire_at", format_iso(a.fire_at)}};
}

json to_json(const scheduler::TickReport& t) {
  json reclaim = json::array();
  for (const auto& a : t.reclaim) reclaim.push_back(to_json(a));
  return {{"activated", t.activated},
          {"completed", t.completed},
          {"expired", t.expired},
          {"promoted", t.promoted},
          {"preempted", t.preempted},
          {"placed", t.placed},
          {"offers_issued", t.offers_issued},
          {"offers_expired", t.offers_expired},
          {"offers_superseded", t.offers_superseded},
          {"auctions_settled", t.auctions_settled},
          {"auctions_voided", t.auctions_voided},
          {"reclaim", reclaim},
          {"housekeeping", t.housekeeping}};
}

json to_json(const scheduler::Rejection& r) { return {{"code", to_string(r.code)}, {"message", r.message}}; }

json to_json(const scheduler::SchedulerState& s) {
  json res = json::array(), offers = json::array(), rej = json::array(), pre = json::array();
  for (const auto& [id, r] : s.reservations) res.push_back(to_json(r));
  for (const auto& [id, o] : s.offers) offers.push_back(to_json(o));
  for (const auto& r : s.rejections) rej.push_back(to_json(r));
  for (const auto& [id, p] : s.preemptions) pre.push_back(to_json(p));
  return {{"reservations", res},
          {"offers", offers},
          {"rejections", rej},
          {"preemptions", pre},
          {"next_reservation", s.next_reservation},
          {"next_offer", s.next_offer},
          {"next_chain", s.next_chain}};
}

scheduler::SchedulerState scheduler_state_from_json(const json& j) {
  scheduler::SchedulerState s;
  for (const auto& r : j.at("reservations")) {
    auto v = reservation_from_json(r);
    s.reservations[v.id] = std::move(v);
  }
  for (const auto& o : j.at("offers")) {
    auto v = offer_from_json(o);
    s.offers[v.id] = std::move(v);
  }
  for (const auto& r : j.at("rejections")) s.rejections.push_back(rejected_from_json(r));
  for (const auto& p : j.at("preemptions")) {
    auto v = preemption_from_json(p);
    s.preemptions[v.reservation] = v;
  }
  s.next_reservation = j.at("next_reservation").get<scheduler::ReservationId>();
  s.next_offer = j.at("next_offer").get<scheduler::OfferId>();
  s.next_chain = j.at("next_chain").get<std::uint64_t>();
  return s;
}

json to_json(const scheduler::SchedulerConfig& c) {
  return {{"dynamic_reallocation", c.dynamic_reallocation},
          {"offer_ttl", c.offer_ttl},
          {"offer_horizon", c.offer_horizon}};
}

scheduler::SchedulerConfig scheduler_config_from_json(const json& j) {
  scheduler::SchedulerConfig c;
  c.dynamic_reallocation = j.value("dynamic_reallocation", c.dynamic_reallocation);
  c.offer_ttl = j.value("offer_ttl", c.offer_ttl);
  c.offer_horizon = j.value("offer_horizon", c.offer_horizon);
  if (c.offer_ttl <= 0) bad("offer_ttl must be positive");
  return c;
}

// --- economy -----------------------------------------------------------------------------------------------------

json to_json(const economy::LedgerEntry& e) {
  return {{"ts", format_iso(e.ts)},
          {"user", e.user},
          {"delta", e.delta},
          {"reason", economy::to_string(e.reason)},
          {"ref", e.ref}};
}

economy::LedgerEntry entry_from_json(const json& j) {
  return {time_from_json(j.at("ts")), j.at("user").get<std::string>(), j.at("delta").get<economy::Tokens>(),
          parse_enum<economy::EntryReason>(j.at("reason"), economy::parse_reason, "reason"),
          j.at("ref").get<std::string>()};
}

json to_json(const economy::Bid& b) {
  return {{"user", b.user}, {"amount", b.amount}, {"placed_at", format_iso(b.placed_at)}};
}

economy::Bid bid_from_json(const json& j) {
  return {j.at("user").get<std::string>(), j.at("amount").get<economy::Tokens>(), time_from_json(j.at("placed_at"))};
}

json to_json(const economy::Auction& a) {
  json bids = json::array();
  for (const auto& b : a.bids) bids.push_back(to_json(b));
  return {{"id", a.id},
          {"resource", a.resource},
          {"start", format_iso(a.interval.start)},
          {"end", format_iso(a.interval.end)},
          {"unit_count", a.unit_count},
          {"opened_at", format_iso(a.opened_at)},
          {"deadline", format_iso(a.deadline)},
          {"bids", bids},
          {"state", economy::to_string(a.state)},
          {"winner", opt(a.winner)},
          {"price", a.price}};
}

economy::Auction auction_from_json(const json& j) {
  economy::Auction a;
  a.id = j.at("id").get<economy::AuctionId>();
  a.resource = j.at("resource").get<std::string>();
  a.interval = {time_from_json(j.at("start")), time_from_json(j.at("end"))};
  a.unit_count = j.at("unit_count").get<int>();
  a.opened_at = time_from_json(j.at("opened_at"));
  a.deadline = time_from_json(j.at("deadline"));
  for (const auto& b : j.at("bids")) a.bids.push_back(bid_from_json(b));
  a.state = parse_enum<economy::AuctionState>(j.at("state"), economy::parse_auction_state, "auction state");
  a.winner = opt_from<std::string>(j, "winner");
  a.price = j.at("price").get<economy::Tokens>();
  return a;
}

json to_json(const economy::Economy::State& s) {
  json entries = json::array(), auctions = json::array(), accounts = json::array();
  for (const auto& e : s.ledger.entries()) entries.push_back(to_json(e));
  for (const auto& [id, a] : s.auctions) auctions.push_back(to_json(a));
  for (const auto& [user, bal] : s.ledger.balances()) accounts.push_back(user);
  return {{"accounts", accounts},
          {"entries", entries},
          {"auctions", auctions},
          {"next_auction", s.next_auction},
          {"accrued", s.accrued},
          {"bonused", s.bonused},
          {"compensated", s.compensated}};
}

economy::Economy::State economy_state_from_json(const json& j) {
  economy::Economy::State s;
  std::vector<economy::LedgerEntry> entries;
  for (const auto& e : j.at("entries")) entries.push_back(entry_from_json(e));
  s.ledger = economy::TokenLedger::from_entries(std::move(entries), j.at("accounts").get<std::set<std::string>>());
  for (const auto& a : j.at("auctions")) {
    auto v = auction_from_json(a);
    s.auctions[v.id] = std::move(v);
  }
  s.next_auction = j.at("next_auction").get<economy::AuctionId>();
  s.accrued = j.at("accrued").get<std::set<scheduler::ReservationId>>();
  s.bonused = j.at("bonused").get<std::set<scheduler::ReservationId>>();
  s.compensated = j.at("compensated").get<std::set<scheduler::ReservationId>>();
  return s;
}

// --- telemetry ---------------------------------------------------------------------------------------------------

json to_json(const telemetry::Telemetry& t) {
  json streams = json::array();
  for (const auto& [unit, points] : t.streams()) {
    json pts = json::array();
    for (const auto& p : points) pts.push_back(json::array({p.ts, p.utilization, p.power_watts}));
    streams.push_back({{"resource", unit.resource}, {"unit", unit.index}, {"points", pts}});
  }
  return streams;
}

telemetry::Telemetry telemetry_from_json(const json& j) {
  telemetry::Telemetry t;
  for (const auto& s : j) {
    std::string resource = s.at("resource").get<std::string>();
    int unit = s.at("unit").get<int>();
    for (const auto& p : s.at("points"))
      t.ingest({resource, unit, p.at(0).get<Minute>(), p.at(1).get<double>(), p.at(2).get<double>()});
  }
  return t;
}

json to_json(const telemetry::UsageReport& r) {
  return {{"subject", r.subject},
          {"window", interval_to_json(r.window)},
          {"covered_minutes", r.covered_minutes},
          {"busy_minutes", r.busy_minutes},
          {"idle_minutes", r.idle_minutes},
          {"dev_minutes", r.dev_minutes},
          {"batch_minutes", r.batch_minutes},
          {"unit_hours", r.unit_hours},
          {"energy_kwh", r.energy_kwh}};
}

telemetry::UtilizationSample sample_from_json(const json& j) {
  if (!j.is_object()) bad("sample must be an object");
  for (const char* k : {"resource", "unit", "ts", "util"})
    if (!j.contains(k)) bad(std::string("sample is missing '") + k + "'");
  if (!j.at("util").is_number() || (j.contains("watts") && !j.at("watts").is_number()))
    bad("sample util and watts must be numbers");
  return {j.at("resource").get<std::string>(), j.at("unit").get<int>(), time_from_json(j.at("ts"), "ts"),
          j.at("util").get<double>(), j.value("watts", 0.0)};
}

json to_json(const telemetry::UtilizationSample& s) {
  return {{"resource", s.resource}, {"unit", s.unit}, {"ts", format_iso(s.ts)}, {"util", s.utilization},
          {"watts", s.power_watts}};
}

// --- catalog / policy --------------------------------------------------------------------------------------------

json to_json(const catalog::Catalog& c) {
  json res = json::array();
  for (const auto& d : c.list(catalog::ResourceFilter{std::nullopt, std::nullopt, std::nullopt, true})) {
    json doc = catalog::descriptor_to_json(d);
    doc["retired"] = d.retired;
    res.push_back(std::move(doc));
  }
  return {{"drivers", c.drivers()}, {"resources", res}};
}

catalog::Catalog catalog_from_json(const json& j) {
  catalog::Catalog c;
  for (const auto& d : j.at("drivers")) c.add_driver(d.get<std::string>());
  for (json doc : j.at("resources")) {
    bool retired = doc.value("retired", false);
    doc.erase("retired");
    std::string id = c.register_resource(catalog::descriptor_from_json(doc));
    if (retired) c.decommission(id);
  }
  return c;
}

json to_json(const policy::Policy& p) { return {{"name", p.name}, {"source", policy::pretty_print(p)}}; }

json to_json(const policy::PolicySet& s) {
  json out = json::array();
  for (const auto& p : s.list()) out.push_back(to_json(p));
  return out;
}

policy::PolicySet policies_from_json(const json& j) {
  std::vector<policy::Policy> list;
  for (const auto& p : j) {
    auto parsed = policy::parse_policy(p.at("source").get<std::string>());
    if (!parsed.ok()) bad("stored policy '" + p.value("name", std::string("?")) + "' does not parse");
    list.push_back(std::move(*parsed.policy));
  }
  policy::PolicySet s(std::move(list));
  s.validate();
  return s;
}

json to_json(const policy::ParseDiagnostic& d) {
  return {{"line", d.line},
          {"column", d.column},
          {"message", d.message},
          {"severity", d.severity == policy::Severity::error ? "error" : "warning"},
          {"text", policy::to_string(d)}};
}

// --- service -----------------------------------------------------------------------------------------------------

json to_json(const UserRecord& u) {
  return {{"user", u.name},
          {"tier", u.tier},
          {"admin", u.admin},
          {"channel", to_string(u.channel)},
          {"webhook", u.webhook}};
}

UserRecord user_from_json(const json& j) {
  UserRecord u;
  if (!j.contains("user") || !j.at("user").is_string() || j.at("user").get<std::string>().empty())
    bad("user record needs a non-empty 'user'");
  u.name = j.at("user").get<std::string>();
  u.tier = j.value("tier", std::string());
  u.admin = j.value("admin", false);
  u.channel = parse_enum<Channel>(j.value("channel", json("log")), parse_channel, "channel");
  u.webhook = j.value("webhook", std::string());
  return u;
}

json to_json(const Notification& n) {
  return {{"id", n.id},
          {"user", n.user},
          {"channel", to_string(n.channel)},
          {"kind", scheduler::to_string(n.kind)},
          {"subject", n.subject},
          {"body", n.body},
          {"created_at", format_iso(n.created_at)},
          {"delivered", n.delivered},
          {"attempts", n.attempts},
          {"error", n.error}};
}

Notification notification_from_json(const json& j) {
  Notification n;
  n.id = j.at("id").get<std::uint64_t>();
  n.user = j.at("user").get<std::string>();
  n.channel = parse_enum<Channel>(j.at("channel"), parse_channel, "channel");
  n.kind = parse_enum<scheduler::NoticeKind>(j.at("kind"), scheduler::parse_notice_kind, "notice kind");
  n.subject = j.at("subject").get<std::string>();
  n.body = j.at("body").get<std::string>();
  n.created_at = time_from_json(j.at("created_at"));
  n.delivered = j.at("delivered").get<bool>();
  n.attempts = j.at("attempts").get<int>();
  n.error = j.at("error").get<std::string>();
  return n;
}

}  // namespace shary::service
