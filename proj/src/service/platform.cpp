#include "shary/service/platform.hpp"

#include <algorithm>

#include "shary/error.hpp"
#include "shary/service/state_json.hpp"

namespace shary::service {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::invalid_request, msg); }

const json& field(const json& p, const char* key) {
  if (!p.is_object() || !p.contains(key)) bad(std::string("missing '") + key + "'");
  return p.at(key);
}

std::string str(const json& p, const char* key) {
  const json& v = field(p, key);
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::string str_or(const json& p, const char* key, std::string fallback) {
  if (!p.is_object() || !p.contains(key) || p.at(key).is_null()) return fallback;
  return str(p, key);
}

std::int64_t integer(const json& p, const char* key) {
  const json& v = field(p, key);
  if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t integer_or(const json& p, const char* key, std::int64_t fallback) {
  if (!p.is_object() || !p.contains(key) || p.at(key).is_null()) return fallback;
  return integer(p, key);
}

std::uint64_t id_of(const json& p, const char* key = "id") {
  std::int64_t v = integer(p, key);
  if (v < 0) bad(std::string("'") + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

Minute duration_of(const json& v, const char* key) {
  if (v.is_number_integer()) return v.get<Minute>();
  if (v.is_string())
    if (auto d = parse_duration(v.get<std::string>())) return *d;
  bad(std::string("'") + key + "' must be a duration such as 90, \"90m\", \"2h\"");
}

void require_admin(const scheduler::Actor& a, const std::string& what) {
  if (!a.admin) throw Error(ErrorCode::forbidden, what + " requires an administrator");
}

}  // namespace

json to_json(const Event& e) {
  return {{"seq", e.seq},
          {"ts", format_iso(e.ts)},
          {"kind", e.kind},
          {"payload", e.payload},
          {"actor", e.actor},
          {"idempotency_key", e.idempotency_key},
          {"result", e.result}};
}

Event event_from_json(const json& j) {
  Event e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.ts = time_from_json(j.at("ts"), "ts");
  e.kind = j.at("kind").get<std::string>();
  e.payload = j.at("payload");
  e.actor = j.at("actor").get<std::string>();
  e.idempotency_key = j.value("idempotency_key", std::string());
  e.result = j.value("result", json());
  return e;
}

Platform::Platform(PlatformConfig config)
    : config_(config),
      scheduler_(std::make_unique<scheduler::Scheduler>(config.scheduler, catalog_, policies_, economy_, telemetry_,
                                                        notifications_)) {}

const UserRecord* Platform::find_user(const std::string& name) const {
  auto it = users_.find(name);
  return it == users_.end() ? nullptr : &it->second;
}

scheduler::Actor Platform::resolve(const std::string& actor) const {
  if (actor == kSystemActor) return {actor, true};
  const UserRecord* u = find_user(actor);
  if (!u) throw Error(ErrorCode::unknown_user, "unknown user '" + actor + "'");
  return {actor, u->admin};
}

std::vector<Event> Platform::events_since(std::uint64_t seq, std::size_t limit) const {
  std::vector<Event> out;
  auto it = std::upper_bound(events_.begin(), events_.end(), seq,
                             [](std::uint64_t s, const Event& e) { return s < e.seq; });
  for (; it != events_.end() && (limit == 0 || out.size() < limit); ++it) out.push_back(*it);
  return out;
}

void Platform::adopt_history(std::vector<Event> events) { events_ = std::move(events); }

json Platform::result_json(const Outcome& o) {
  return {{"document", o.document},
          {"rejection", o.rejection ? to_json(*o.rejection) : json()},
          {"warnings", o.warnings}};
}

CommandResult Platform::from_result(const json& result, std::uint64_t seq) {
  CommandResult r;
  r.seq = seq;
  r.document = result.at("document");
  if (!result.at("rejection").is_null()) {
    ErrorCode code = ErrorCode::invalid_request;
    parse_error_code(result["rejection"].at("code").get<std::string>(), code);
    r.rejection = scheduler::Rejection{code, result["rejection"].at("message").get<std::string>()};
  }
  r.warnings = result.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::uint64_t Platform::append(const Command& cmd, const json& result) {
  Event e{seq_ + 1, cmd.ts, cmd.kind, cmd.payload, cmd.actor, cmd.idempotency_key, result};
  seq_ = e.seq;
  clock_ = std::max(clock_, e.ts);
  if (!cmd.idempotency_key.empty()) idempotency_[cmd.actor + '\x1f' + cmd.idempotency_key] = {e.seq, result};
  events_.push_back(std::move(e));
  if (sink_ && !replaying_) sink_(events_.back());
  return seq_;
}

CommandResult Platform::execute(const Command& in) {
  Command cmd = in;
  cmd.ts = std::max(cmd.ts, clock_);
  if (!cmd.idempotency_key.empty()) {
    auto it = idempotency_.find(cmd.actor + '\x1f' + cmd.idempotency_key);
    if (it != idempotency_.end()) {
      CommandResult r = from_result(it->second.result, it->second.seq);
      r.duplicate = true;
      return r;
    }
  }
  if (cmd.kind != "tick") run(Command{"tick", json::object(), std::string(kSystemActor), cmd.ts, {}});
  return run(cmd);
}

CommandResult Platform::run(const Command& cmd) {
  scheduler::Actor actor = resolve(cmd.actor);
  Outcome o = dispatch(cmd, actor);
  CommandResult r;
  r.document = o.document;
  r.rejection = o.rejection;
  r.warnings = o.warnings;
  if (o.changed) r.seq = append(cmd, result_json(o));
  return r;
}

const std::map<std::string, Platform::Handler>& Platform::handlers() {
  static const std::map<std::string, Handler> table{
      {"user.register", &Platform::do_user_register},
      {"driver.register", &Platform::do_driver_register},
      {"resource.register", &Platform::do_resource_register},
      {"resource.decommission", &Platform::do_resource_decommission},
      {"resource.reclaim", &Platform::do_resource_reclaim},
      {"policy.install", &Platform::do_policy_install},
      {"reservation.request", &Platform::do_reservation_request},
      {"reservation.force", &Platform::do_reservation_force},
      {"reservation.cancel", &Platform::do_reservation_cancel},
      {"reservation.release", &Platform::do_reservation_release},
      {"batch.submit", &Platform::do_batch_submit},
      {"auction.bid", &Platform::do_auction_bid},
      {"offer.accept", &Platform::do_offer_accept},
      {"offer.decline", &Platform::do_offer_decline},
      {"telemetry.ingest", &Platform::do_telemetry_ingest},
      {"tokens.grant", &Platform::do_tokens_grant},
      {"notification.delivery", &Platform::do_notification_delivery},
      {"tick", &Platform::do_tick},
  };
  return table;
}

Platform::Outcome Platform::dispatch(const Command& cmd, const scheduler::Actor& actor) {
  auto it = handlers().find(cmd.kind);
  if (it == handlers().end()) bad("unknown command kind '" + cmd.kind + "'");
  try {
    return (this->*(it->second))(cmd, actor);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed payload: ") + e.what());
  }
}

// --- replay ------------------------------------------------------------------------------------------------------

void Platform::apply_event(const Event& e) {
  if (e.seq != seq_ + 1)
    throw Error(ErrorCode::corrupt_log,
                "expected event " + std::to_string(seq_ + 1) + ", found " + std::to_string(e.seq));
  Command cmd{e.kind, e.payload, e.actor, e.ts, e.idempotency_key};
  replaying_ = true;
  Outcome o;
  try {
    o = dispatch(cmd, resolve(cmd.actor));
  } catch (const Error& err) {
    replaying_ = false;
    throw Error(ErrorCode::corrupt_log, "event " + std::to_string(e.seq) + " failed on replay: " + err.what());
  }
  json result = result_json(o);
  if (!o.changed || (!e.result.is_null() && result != e.result)) {
    replaying_ = false;
    throw Error(ErrorCode::corrupt_log, "event " + std::to_string(e.seq) + " diverged on replay");
  }
  append(cmd, result);
  replaying_ = false;
}

std::unique_ptr<Platform> Platform::replay(const std::vector<Event>& events, PlatformConfig config,
                                           const json* snapshot) {
  std::unique_ptr<Platform> p = snapshot ? from_snapshot(*snapshot) : std::make_unique<Platform>(config);
  std::vector<Event> history;
  for (const Event& e : events) {
    if (e.seq <= p->seq_) {
      history.push_back(e);
      continue;
    }
    p->apply_event(e);
  }
  if (!history.empty()) {
    history.insert(history.end(), p->events_.begin(), p->events_.end());
    p->events_ = std::move(history);
  }
  return p;
}

json Platform::snapshot() const {
  json users = json::array();
  for (const auto& [name, u] : users_) users.push_back(to_json(u));
  json notes = json::array();
  auto ns = notifications_.state();
  for (const auto& [id, n] : ns.notifications) notes.push_back(to_json(n));
  json idem = json::object();
  for (const auto& [key, r] : idempotency_) idem[key] = {{"seq", r.seq}, {"result", r.result}};
  return {{"seq", seq_},
          {"clock", clock_},
          {"config", {{"scheduler", to_json(config_.scheduler)}, {"snapshot_every", config_.snapshot_every}}},
          {"users", users},
          {"catalog", to_json(catalog_)},
          {"policies", to_json(policies_)},
          {"scheduler", to_json(scheduler_->state())},
          {"economy", to_json(economy_.state())},
          {"telemetry", to_json(telemetry_)},
          {"notifications", {{"items", notes}, {"next_id", ns.next_id}}},
          {"idempotency", idem}};
}

std::unique_ptr<Platform> Platform::from_snapshot(const json& doc) {
  try {
    PlatformConfig config;
    config.scheduler = scheduler_config_from_json(doc.at("config").at("scheduler"));
    config.snapshot_every = doc.at("config").at("snapshot_every").get<std::uint64_t>();
    auto p = std::make_unique<Platform>(config);
    for (const auto& u : doc.at("users")) {
      UserRecord rec = user_from_json(u);
      p->users_[rec.name] = rec;
    }
    p->catalog_ = catalog_from_json(doc.at("catalog"));
    p->policies_ = policies_from_json(doc.at("policies"));
    p->economy_.restore(economy_state_from_json(doc.at("economy")));
    p->telemetry_ = telemetry_from_json(doc.at("telemetry"));
    p->scheduler_->restore(scheduler_state_from_json(doc.at("scheduler")));
    NotificationCenter::State ns;
    for (const auto& n : doc.at("notifications").at("items")) {
      Notification v = notification_from_json(n);
      ns.notifications[v.id] = std::move(v);
    }
    ns.next_id = doc.at("notifications").at("next_id").get<std::uint64_t>();
    p->notifications_.restore(std::move(ns));
    for (const auto& [key, r] : doc.at("idempotency").items())
      p->idempotency_[key] = {r.at("seq").get<std::uint64_t>(), r.at("result")};
    p->seq_ = doc.at("seq").get<std::uint64_t>();
    p->clock_ = doc.at("clock").get<Minute>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::corrupt_log, std::string("unreadable snapshot: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::corrupt_log, std::string("unreadable snapshot: ") + e.what());
  }
}

// --- reports -----------------------------------------------------------------------------------------------------

telemetry::UsageReport Platform::usage_report(const std::string& subject, Interval window, Minute now) const {
  bool is_user = users_.count(subject) != 0;
  bool is_resource = catalog_.find(subject) != nullptr;
  if (!is_user && !is_resource) throw Error(ErrorCode::unknown_subject, "unknown subject '" + subject + "'");
  std::vector<telemetry::HeldSpan> spans;
  for (const auto& [id, r] : scheduler_->reservations()) {
    if (r.resource.empty() || r.units.empty()) continue;
    using S = scheduler::ReservationState;
    if (r.state == S::queued || r.state == S::cancelled || r.state == S::expired) continue;
    if (is_user ? r.user != subject : r.resource != subject) continue;
    spans.push_back({r.resource, r.units, r.interval});
  }
  return telemetry::usage_report(telemetry_, subject, spans, window, now);
}

// --- handlers ----------------------------------------------------------------------------------------------------

Platform::Outcome Platform::do_user_register(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "user registration");
  UserRecord u = user_from_json(cmd.payload);
  if (u.name == kSystemActor) bad("'system' is reserved");
  if (users_.count(u.name)) throw Error(ErrorCode::duplicate_id, "user '" + u.name + "' already registered");
  if (u.channel == Channel::webhook && u.webhook.empty()) bad("webhook channel needs a 'webhook' URL");
  users_[u.name] = u;
  economy_.open_account(u.name, cmd.ts);
  return {to_json(u)};
}

Platform::Outcome Platform::do_driver_register(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "driver registration");
  std::string id = str(cmd.payload, "id");
  if (id.empty()) bad("driver id must be non-empty");
  Outcome o{{{"id", id}}};
  o.changed = !catalog_.has_driver(id);
  catalog_.add_driver(id);
  return o;
}

Platform::Outcome Platform::do_resource_register(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "resource enrollment");
  catalog::ResourceDescriptor d = catalog::descriptor_from_json(cmd.payload);
  std::string id = catalog_.register_resource(d);
  return {catalog::descriptor_to_json(catalog_.get(id))};
}

Platform::Outcome Platform::do_resource_decommission(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "decommissioning");
  std::string id = str(cmd.payload, "id");
  catalog_.decommission(id);
  auto cancelled = scheduler_->on_decommission(id, cmd.ts);
  return {{{"id", id}, {"retired", true}, {"cancelled", cancelled}}};
}

Platform::Outcome Platform::do_resource_reclaim(const Command& cmd, const scheduler::Actor& actor) {
  std::string id = str(cmd.payload, "id");
  auto actions = scheduler_->owner_reclaim(id, actor, cmd.ts);
  json list = json::array();
  for (const auto& a : actions) list.push_back(to_json(a));
  Outcome o{{{"resource", id}, {"actions", list}}};
  o.changed = !actions.empty();
  return o;
}

Platform::Outcome Platform::do_policy_install(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "policy installation");
  std::string source = str(cmd.payload, "source");
  policy::ParseResult parsed = policy::parse_policy(source);
  if (!parsed.ok()) {
    json diags = json::array();
    for (const auto& d : parsed.diagnostics) diags.push_back(to_json(d));
    Outcome o{{{"diagnostics", diags}}};
    o.changed = false;
    o.rejection = scheduler::Rejection{ErrorCode::parse_error,
                                       parsed.diagnostics.empty() ? "parse error"
                                                                  : policy::to_string(parsed.diagnostics.front())};
    return o;
  }
  policies_.install(*parsed.policy);
  return {to_json(*parsed.policy)};
}

Platform::Outcome Platform::do_reservation_request(const Command& cmd, const scheduler::Actor& actor) {
  const json& p = cmd.payload;
  scheduler::ReservationRequest req;
  req.user = actor.user;
  if (p.contains("user") && !p.at("user").is_null()) {
    std::string on_behalf = str(p, "user");
    if (on_behalf != actor.user) require_admin(actor, "booking for another user");
    req.user = on_behalf;
  }
  const UserRecord* u = find_user(req.user);
  if (!u) throw Error(ErrorCode::unknown_user, "unknown user '" + req.user + "'");
  req.tier = str_or(p, "tier", u->tier);
  req.resource = str(p, "resource");
  req.unit_count = static_cast<int>(integer_or(p, "units", 1));
  req.interval.start = time_from_json(field(p, "start"), "start");
  if (p.contains("end"))
    req.interval.end = time_from_json(p.at("end"), "end");
  else
    req.interval.end = req.interval.start + duration_of(field(p, "duration"), "duration");
  std::string mode = str_or(p, "mode", "interactive");
  auto m = scheduler::parse_mode(mode);
  if (!m) bad("mode must be interactive or batch");
  req.mode = *m;
  if (p.contains("bid") && !p.at("bid").is_null()) req.bid = integer(p, "bid");

  std::size_t rejections_before = scheduler_->rejections().size();
  scheduler::RequestOutcome out = scheduler_->request_reservation(req, cmd.ts);
  Outcome o;
  o.warnings = out.warnings;
  if (out.reservation) {
    o.document = to_json(*out.reservation);
    if (out.bid_rejection) o.document["bid_rejection"] = to_json(*out.bid_rejection);
  } else {
    o.rejection = out.rejection;
    o.document = {{"error", to_json(*out.rejection)}};
    o.changed = scheduler_->rejections().size() != rejections_before;
  }
  return o;
}

Platform::Outcome Platform::do_reservation_force(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "a manual reservation edit");
  const json& p = cmd.payload;
  std::string user = str(p, "user");
  if (!find_user(user)) throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
  const json& units = field(p, "units");
  if (!units.is_array()) bad("'units' must be an array of unit indices");
  std::vector<int> list;
  for (const auto& u : units) {
    if (!u.is_number_integer()) bad("'units' must be an array of unit indices");
    list.push_back(u.get<int>());
  }
  Interval iv{time_from_json(field(p, "start"), "start"), time_from_json(field(p, "end"), "end")};
  auto out = scheduler_->force_reservation(user, str(p, "resource"), list, iv, cmd.ts);
  Outcome o;
  o.warnings = out.warnings;
  if (out.reservation) {
    o.document = to_json(*out.reservation);
  } else {
    o.rejection = out.rejection;
    o.document = {{"error", to_json(*out.rejection)}};
    o.changed = false;
  }
  return o;
}

Platform::Outcome Platform::do_reservation_cancel(const Command& cmd, const scheduler::Actor& actor) {
  auto id = id_of(cmd.payload);
  scheduler_->cancel_reservation(id, actor, cmd.ts);
  return {to_json(scheduler_->get(id))};
}

Platform::Outcome Platform::do_reservation_release(const Command& cmd, const scheduler::Actor& actor) {
  auto id = id_of(cmd.payload);
  Minute at = cmd.payload.contains("at") ? time_from_json(cmd.payload.at("at"), "at") : cmd.ts;
  Interval freed = scheduler_->release_early(id, at, actor, cmd.ts);
  json doc = to_json(scheduler_->get(id));
  doc["freed"] = interval_to_json(freed);
  return {doc};
}

Platform::Outcome Platform::do_batch_submit(const Command& cmd, const scheduler::Actor& actor) {
  const json& p = cmd.payload;
  const UserRecord* u = find_user(actor.user);
  if (!u) throw Error(ErrorCode::unknown_user, "unknown user '" + actor.user + "'");
  scheduler::BatchRequest req;
  req.user = actor.user;
  req.tier = str_or(p, "tier", u->tier);
  auto kind = catalog::parse_kind(str(p, "kind"));
  if (!kind) bad("unknown resource kind '" + str(p, "kind") + "'");
  req.kind = *kind;
  req.unit_count = static_cast<int>(integer_or(p, "units", 1));
  req.duration = duration_of(field(p, "duration"), "duration");
  if (p.contains("deadline") && !p.at("deadline").is_null()) req.deadline = time_from_json(p.at("deadline"), "deadline");

  std::size_t rejections_before = scheduler_->rejections().size();
  auto out = scheduler_->submit_batch(req, cmd.ts);
  Outcome o;
  if (out.reservation) {
    o.document = to_json(*out.reservation);
  } else {
    o.rejection = out.rejection;
    o.document = {{"error", to_json(*out.rejection)}};
    o.changed = scheduler_->rejections().size() != rejections_before;
  }
  return o;
}

Platform::Outcome Platform::do_auction_bid(const Command& cmd, const scheduler::Actor& actor) {
  auto id = id_of(cmd.payload, "auction");
  scheduler_->place_bid(id, actor.user, integer(cmd.payload, "amount"), cmd.ts);
  json doc = to_json(*economy_.find_auction(id));
  // Bids are sealed: the bidder sees only their own.
  json mine = json::array();
  for (const auto& b : doc["bids"])
    if (b["user"] == actor.user) mine.push_back(b);
  doc["bids"] = mine;
  return {doc};
}

Platform::Outcome Platform::do_offer_accept(const Command& cmd, const scheduler::Actor& actor) {
  auto r = scheduler_->accept_offer(id_of(cmd.payload), actor, cmd.ts);
  return {to_json(r)};
}

Platform::Outcome Platform::do_offer_decline(const Command& cmd, const scheduler::Actor& actor) {
  auto id = id_of(cmd.payload);
  scheduler_->decline_offer(id, actor, cmd.ts);
  return {to_json(scheduler_->offers().at(id))};
}

Platform::Outcome Platform::do_telemetry_ingest(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "telemetry ingestion");
  const json& p = cmd.payload;
  json samples = p.contains("samples") ? p.at("samples") : json::array({p});
  if (!samples.is_array()) bad("'samples' must be an array");
  std::size_t accepted = 0;
  Outcome o;
  for (const auto& j : samples) {
    try {
      telemetry::UtilizationSample s = sample_from_json(j);
      const catalog::ResourceDescriptor* d = catalog_.find(s.resource);
      if (!d) throw Error(ErrorCode::unknown_resource, "unknown resource '" + s.resource + "'");
      if (s.unit < 0 || s.unit >= d->units)
        throw Error(ErrorCode::invalid_sample, "unit " + std::to_string(s.unit) + " is outside '" + s.resource + "'");
      telemetry_.ingest(s);
      ++accepted;
    } catch (const Error& e) {
      o.rejection = scheduler::Rejection{e.code(), "sample " + std::to_string(accepted) + ": " + e.what()};
      break;
    }
  }
  if (o.rejection && accepted == 0) throw Error(o.rejection->code, o.rejection->message);
  o.document = {{"accepted", accepted}, {"rejected", samples.size() - accepted}};
  o.changed = accepted > 0;
  return o;
}

Platform::Outcome Platform::do_tokens_grant(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "token grants");
  std::string user = str(cmd.payload, "user");
  if (!find_user(user)) throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
  economy::Tokens amount = integer(cmd.payload, "amount");
  if (amount == 0) bad("grant amount must be non-zero");
  economy_.grant(user, amount, cmd.ts, str_or(cmd.payload, "ref", "admin"));
  return {{{"user", user}, {"balance", economy_.balance(user)}}};
}

Platform::Outcome Platform::do_notification_delivery(const Command& cmd, const scheduler::Actor& actor) {
  if (actor.user != kSystemActor) throw Error(ErrorCode::forbidden, "delivery outcomes come from the dispatcher");
  auto id = id_of(cmd.payload);
  const json& d = field(cmd.payload, "delivered");
  if (!d.is_boolean()) bad("'delivered' must be a boolean");
  notifications_.mark_delivery(id, d.get<bool>(), static_cast<int>(integer(cmd.payload, "attempts")),
                               str_or(cmd.payload, "error", ""));
  return {to_json(notifications_.all().at(id))};
}

Platform::Outcome Platform::do_tick(const Command& cmd, const scheduler::Actor& actor) {
  require_admin(actor, "tick");
  scheduler::TickReport report = scheduler_->tick(cmd.ts);
  Outcome o{to_json(report)};
  o.changed = !report.empty();
  return o;
}

}  // namespace shary::service
