#include <chrono>
#include <functional>
#include <regex>
#include <thread>

#include "shary/service/api.hpp"
#include "shary/service/state_json.hpp"

namespace shary::service {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::unauthorized:
      return 401;
    case ErrorCode::forbidden:
    case ErrorCode::forbidden_actor:
    case ErrorCode::owner_reclaim_denied:
    case ErrorCode::no_grant:
      return 403;
    case ErrorCode::unknown_driver:
    case ErrorCode::unknown_id:
    case ErrorCode::unknown_tier:
    case ErrorCode::unknown_resource:
    case ErrorCode::unknown_offer:
    case ErrorCode::unknown_auction:
    case ErrorCode::unknown_subject:
    case ErrorCode::unknown_instance:
    case ErrorCode::unknown_remote:
    case ErrorCode::unknown_project:
    case ErrorCode::unknown_profile:
    case ErrorCode::unknown_user:
      return 404;
    case ErrorCode::duplicate_id:
    case ErrorCode::duplicate_name:
    case ErrorCode::invalid_state:
    case ErrorCode::offer_unavailable:
    case ErrorCode::overlap:
    case ErrorCode::capacity_exceeded:
    case ErrorCode::retired_resource:
    case ErrorCode::auction_closed:
    case ErrorCode::already_settled:
    case ErrorCode::already_accrued:
    case ErrorCode::already_compensated:
    case ErrorCode::unit_already_attached:
    case ErrorCode::insufficient_tokens:
    case ErrorCode::not_yet_deadline:
      return 409;
    case ErrorCode::unknown_verb:
      return 400;
    case ErrorCode::driver_unreachable:
      return 503;
    case ErrorCode::corrupt_log:
    case ErrorCode::bind_failure:
      return 500;
    default:
      return 422;
  }
}

json error_document(ErrorCode code, const std::string& message) {
  return {{"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
}

namespace {

using Params = std::vector<std::string>;

struct Context {
  Service& service;
  const ApiRequest& req;
  Principal who;
  Params params;
  json body;
};

ApiResponse fail(ErrorCode code, const std::string& message) { return {http_status(code), error_document(code, message)}; }

std::string query(const Context& c, const std::string& key, const std::string& fallback = {}) {
  auto it = c.req.query.find(key);
  return it == c.req.query.end() ? fallback : it->second;
}

bool has_query(const Context& c, const std::string& key) { return c.req.query.count(key) > 0; }

Minute query_time(const Context& c, const std::string& key, Minute fallback) {
  if (!has_query(c, key)) return fallback;
  return time_from_json(json(query(c, key)), key.c_str());
}

std::uint64_t query_uint(const Context& c, const std::string& key, std::uint64_t fallback) {
  if (!has_query(c, key)) return fallback;
  const std::string v = query(c, key);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw Error(ErrorCode::invalid_request, "'" + key + "' must be a non-negative integer");
  return std::stoull(v);
}

bool query_flag(const Context& c, const std::string& key) {
  std::string v = query(c, key);
  return v == "1" || v == "true" || v == "yes";
}

std::uint64_t param_id(const Context& c, std::size_t i) {
  const std::string& v = c.params.at(i);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw Error(ErrorCode::invalid_request, "'" + v + "' is not a numeric id");
  return std::stoull(v);
}

void require_admin(const Context& c) {
  if (!c.who.admin) throw Error(ErrorCode::forbidden, "admin only");
}

/// Runs a mutating command and shapes the answer: the command document, plus the event seq.
ApiResponse mutate(Context& c, const std::string& kind, json payload, int success = 200) {
  CommandResult r = c.service.submit({kind, std::move(payload), c.who.user, 0, c.req.idempotency_key});
  ApiResponse out;
  out.body = r.document.is_object() ? r.document : json{{"document", r.document}};
  if (r.rejection) {
    out.status = http_status(r.rejection->code);
    out.body["error"] = to_json(*r.rejection);
  } else {
    out.status = success;
  }
  if (!r.warnings.empty()) out.body["warnings"] = r.warnings;
  out.body["event_seq"] = r.seq ? json(r.seq) : json();
  if (r.seq) out.headers["X-Event-Seq"] = std::to_string(r.seq);
  if (r.duplicate) out.headers["Idempotent-Replay"] = "true";
  return out;
}

json with_seq(Context& c, json doc) {
  doc["seq"] = c.service.read([](const Platform& p) { return p.seq(); });
  return doc;
}

json resource_document(const catalog::ResourceDescriptor& d) {
  json j = catalog::descriptor_to_json(d);
  j["retired"] = d.retired;
  return j;
}

json auction_document(const economy::Auction& a, const Principal& who) {
  json j = to_json(a);
  j["bid_count"] = a.bids.size();
  if (!who.admin && a.state == economy::AuctionState::open) {
    json mine = json::array();
    for (const auto& b : j["bids"])
      if (b["user"] == who.user) mine.push_back(b);
    j["bids"] = mine;
  }
  return j;
}

// ---- resources

ApiResponse list_resources(Context& c) {
  catalog::ResourceFilter f;
  if (has_query(c, "kind")) {
    f.kind = catalog::parse_kind(query(c, "kind"));
    if (!f.kind) throw Error(ErrorCode::invalid_request, "unknown kind '" + query(c, "kind") + "'");
  }
  if (has_query(c, "site")) f.site = query(c, "site");
  if (has_query(c, "owner")) f.owner = query(c, "owner");
  f.include_retired = query_flag(c, "include_retired");
  return {200, with_seq(c, c.service.read([&](const Platform& p) {
            json list = json::array();
            for (const auto& d : p.catalog().list(f)) list.push_back(resource_document(d));
            return json{{"resources", list}};
          }))};
}

ApiResponse get_resource(Context& c) {
  return {200, c.service.read([&](const Platform& p) {
            const auto* d = p.catalog().find(c.params[0]);
            if (!d) throw Error(ErrorCode::unknown_resource, "unknown resource '" + c.params[0] + "'");
            json j = resource_document(*d);
            if (!d->retired) j["policy"] = p.policies().effective(*d).name;
            return j;
          })};
}

ApiResponse add_resource(Context& c) { return mutate(c, "resource.register", c.body, 201); }

ApiResponse decommission_resource(Context& c) { return mutate(c, "resource.decommission", {{"id", c.params[0]}}); }

ApiResponse reclaim_resource(Context& c) { return mutate(c, "resource.reclaim", {{"resource", c.params[0]}}); }

// ---- reservations

ApiResponse list_reservations(Context& c) {
  std::optional<scheduler::ReservationState> state;
  if (has_query(c, "state")) {
    state = scheduler::parse_state(query(c, "state"));
    if (!state) throw Error(ErrorCode::invalid_request, "unknown state '" + query(c, "state") + "'");
  }
  std::string user = query(c, "user");
  if (query_flag(c, "mine")) user = c.who.user;
  std::string resource = query(c, "resource");
  return {200, with_seq(c, c.service.read([&](const Platform& p) {
            json list = json::array();
            for (const auto& [id, r] : p.scheduler().reservations()) {
              if (!user.empty() && r.user != user) continue;
              if (!resource.empty() && r.resource != resource) continue;
              if (state && r.state != *state) continue;
              list.push_back(to_json(r));
            }
            return json{{"reservations", list}};
          }))};
}

ApiResponse get_reservation(Context& c) {
  auto id = param_id(c, 0);
  return {200, c.service.read([&](const Platform& p) {
            const auto* r = p.scheduler().find(id);
            if (!r) throw Error(ErrorCode::unknown_id, "unknown reservation " + std::to_string(id));
            return to_json(*r);
          })};
}

ApiResponse create_reservation(Context& c) {
  if (c.body.value("force", false)) {
    json payload = c.body;
    payload.erase("force");
    return mutate(c, "reservation.force", payload, 201);
  }
  return mutate(c, "reservation.request", c.body, 201);
}

ApiResponse cancel_reservation(Context& c) {
  return mutate(c, "reservation.cancel", {{"id", param_id(c, 0)}});
}

ApiResponse release_reservation(Context& c) {
  json payload = c.body;
  payload["id"] = param_id(c, 0);
  return mutate(c, "reservation.release", payload);
}

ApiResponse submit_batch(Context& c) { return mutate(c, "batch.submit", c.body, 201); }

// ---- availability

ApiResponse availability(Context& c) {
  std::string resource = query(c, "resource");
  if (resource.empty()) throw Error(ErrorCode::invalid_request, "'resource' is required");
  Minute now = c.service.now();
  Interval window;
  window.start = query_time(c, "start", align_down(now));
  window.end = query_time(c, "end", window.start + 7 * kDay);
  if (window.end <= window.start) throw Error(ErrorCode::invalid_request, "empty window");
  if (window.end - window.start > 62 * kDay) throw Error(ErrorCode::invalid_request, "window longer than 62 days");
  return {200, with_seq(c, c.service.read([&](const Platform& p) {
            const auto* d = p.catalog().find(resource);
            if (!d) throw Error(ErrorCode::unknown_resource, "unknown resource '" + resource + "'");
            auto free = p.scheduler().availability(resource, window);
            json units = json::array();
            for (int u = 0; u < d->units; ++u) {
              json f = json::array();
              if (u < static_cast<int>(free.size()))
                for (const auto& iv : free[u]) f.push_back(interval_to_json(iv));
              units.push_back({{"unit", u}, {"free", f}, {"bookings", json::array()}});
            }
            for (const auto& [id, r] : p.scheduler().reservations()) {
              if (r.resource != resource || !r.holds_capacity() || !r.interval.overlaps(window)) continue;
              for (int u : r.units) {
                if (u < 0 || u >= d->units) continue;
                units[u]["bookings"].push_back({{"reservation", r.id},
                                                {"user", r.user},
                                                {"state", std::string(scheduler::to_string(r.state))},
                                                {"mode", std::string(scheduler::to_string(r.mode))},
                                                {"start", time_to_json(r.interval.start)},
                                                {"end", time_to_json(r.interval.end)}});
              }
            }
            json offers = json::array();
            for (const auto& [id, o] : p.scheduler().offers())
              if (o.resource == resource && o.state == scheduler::OfferState::open && o.window.overlaps(window))
                offers.push_back(to_json(o));
            return json{{"resource", resource},
                        {"retired", d->retired},
                        {"window", interval_to_json(window)},
                        {"slot_minutes", kGranularity},
                        {"units", units},
                        {"offers", offers}};
          }))};
}

// ---- policies

ApiResponse list_policies(Context& c) {
  return {200, with_seq(c, c.service.read([](const Platform& p) { return json{{"policies", to_json(p.policies())}}; }))};
}

ApiResponse install_policy(Context& c) {
  json payload;
  if (c.body.is_object() && c.body.contains("source"))
    payload = {{"source", c.body["source"]}};
  else
    payload = {{"source", c.req.body}};
  return mutate(c, "policy.install", payload, 201);
}

// ---- auctions and tokens

ApiResponse list_auctions(Context& c) {
  std::optional<economy::AuctionState> state;
  if (has_query(c, "state") && query(c, "state") != "all") {
    state = economy::parse_auction_state(query(c, "state"));
    if (!state) throw Error(ErrorCode::invalid_request, "unknown auction state '" + query(c, "state") + "'");
  }
  std::string resource = query(c, "resource");
  return {200, with_seq(c, c.service.read([&](const Platform& p) {
            json list = json::array();
            for (const auto& [id, a] : p.economy().auctions()) {
              if (state && a.state != *state) continue;
              if (!resource.empty() && a.resource != resource) continue;
              list.push_back(auction_document(a, c.who));
            }
            return json{{"auctions", list}};
          }))};
}

ApiResponse place_bid(Context& c) {
  if (!c.body.is_object()) throw Error(ErrorCode::invalid_request, "body must be an object");
  json payload = c.body;
  payload["auction"] = param_id(c, 0);
  return mutate(c, "auction.bid", payload, 201);
}

ApiResponse get_tokens(Context& c) {
  const std::string& user = c.params[0];
  if (user != c.who.user && !c.who.admin) throw Error(ErrorCode::forbidden, "token accounts are private");
  return {200, c.service.read([&](const Platform& p) {
            if (!p.find_user(user)) throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
            json entries = json::array();
            for (const auto& e : p.economy().ledger().entries())
              if (e.user == user) entries.push_back(to_json(e));
            return json{{"user", user}, {"balance", p.economy().balance(user)}, {"entries", entries}};
          })};
}

ApiResponse grant_tokens(Context& c) {
  json payload = c.body;
  payload["user"] = c.params[0];
  return mutate(c, "tokens.grant", payload);
}

// ---- telemetry and reports

ApiResponse ingest_samples(Context& c) { return mutate(c, "telemetry.ingest", c.body, 201); }

ApiResponse usage_report(Context& c) {
  std::string subject = query(c, "subject", c.who.user);
  Minute now = c.service.now();
  Interval window{query_time(c, "start", now - 7 * kDay), query_time(c, "end", now)};
  if (window.end <= window.start) throw Error(ErrorCode::invalid_request, "empty window");
  return {200, c.service.read([&](const Platform& p) {
            if (p.find_user(subject) && subject != c.who.user && !c.who.admin)
              throw Error(ErrorCode::forbidden, "usage reports of other users are admin only");
            json j = to_json(p.usage_report(subject, window, now));
            j["kind"] = p.find_user(subject) ? "user" : "resource";
            return j;
          })};
}

// ---- offers

ApiResponse list_offers(Context& c) {
  std::string state = query(c, "state", "open");
  bool all = c.who.admin && query_flag(c, "all");
  return {200, with_seq(c, c.service.read([&](const Platform& p) {
            json list = json::array();
            for (const auto& [id, o] : p.scheduler().offers()) {
              if (!all && o.candidate.user != c.who.user) continue;
              json j = to_json(o);
              if (state != "all" && j.value("state", "") != state) continue;
              list.push_back(j);
            }
            return json{{"offers", list}};
          }))};
}

ApiResponse accept_offer(Context& c) { return mutate(c, "offer.accept", {{"id", param_id(c, 0)}}, 201); }

ApiResponse decline_offer(Context& c) { return mutate(c, "offer.decline", {{"id", param_id(c, 0)}}); }

// ---- events, notifications, clock

// Bids are sealed: other users see that a bid happened, not its amount.
void redact_bids(json& event) {
  const std::string kind = event["kind"];
  if (kind == "auction.bid") {
    event["payload"].erase("amount");
    event["result"] = nullptr;
  } else if (kind == "reservation.request" && event["payload"].contains("bid")) {
    event["payload"].erase("bid");
    if (event["result"].is_object() && event["result"]["document"].is_object())
      event["result"]["document"].erase("bid");
  }
}

ApiResponse list_events(Context& c) {
  std::uint64_t since = query_uint(c, "since", 0);
  std::size_t limit = std::min<std::uint64_t>(query_uint(c, "limit", 1000), 10000);
  std::uint64_t wait = std::min<std::uint64_t>(query_uint(c, "wait", 0), 30);
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(wait);
  while (wait && c.service.read([](const Platform& p) { return p.seq(); }) <= since &&
         std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  return {200, c.service.read([&](const Platform& p) {
            json list = json::array();
            for (const auto& e : p.events_since(since, limit)) {
              json j = to_json(e);
              if (!c.who.admin && e.actor != c.who.user) redact_bids(j);
              list.push_back(std::move(j));
            }
            return json{{"events", list}, {"head", p.seq()}};
          })};
}

ApiResponse list_notifications(Context& c) {
  std::string user = query(c, "user", c.who.user);
  if (user != c.who.user && !c.who.admin) throw Error(ErrorCode::forbidden, "notifications are private");
  return {200, c.service.read([&](const Platform& p) {
            json list = json::array();
            for (const auto& n : p.notifications().for_user(user)) list.push_back(to_json(n));
            return json{{"notifications", list}};
          })};
}

ApiResponse get_clock(Context& c) {
  return {200, {{"now", time_to_json(c.service.now())}, {"sim", c.service.sim_clock()}}};
}

ApiResponse set_clock(Context& c) {
  require_admin(c);
  Minute t = time_from_json(c.body.contains("now") ? c.body["now"] : json(), "now");
  c.service.set_clock(t);
  return {200, with_seq(c, {{"now", time_to_json(c.service.now())}, {"sim", true}})};
}

ApiResponse tick(Context& c) { return mutate(c, "tick", json::object()); }

ApiResponse whoami(Context& c) {
  return {200, c.service.read([&](const Platform& p) {
            const UserRecord* u = p.find_user(c.who.user);
            json j = u ? to_json(*u) : json{{"user", c.who.user}};
            j["admin"] = c.who.admin;
            j["balance"] = p.economy().balance(c.who.user);
            return j;
          })};
}

// ---- drivers

ApiResponse list_drivers(Context& c) {
  json list = json::array();
  for (const auto& d : c.service.config().drivers) {
    auto* drv = c.service.broker().find(d.id);
    list.push_back({{"id", d.id},
                    {"type", d.type},
                    {"reachable", drv ? drv->reachable() : false},
                    {"pending_revocations", drv ? c.service.broker().reconciler(d.id).pending().size() : 0}});
  }
  return {200, {{"drivers", list}}};
}

ApiResponse exec_driver(Context& c) {
  if (!c.body.is_object() || !c.body.contains("args") || !c.body["args"].is_array())
    throw Error(ErrorCode::invalid_request, "body must be {\"args\": [...]}");
  std::vector<std::string> args;
  for (const auto& a : c.body["args"]) {
    if (!a.is_string()) throw Error(ErrorCode::invalid_request, "'args' must be strings");
    args.push_back(a.get<std::string>());
  }
  if (!c.service.broker().find(c.params[0]))
    throw Error(ErrorCode::unknown_driver, "unknown driver '" + c.params[0] + "'");
  broker::ExecResult r = c.service.exec_driver(c.params[0], c.who, args);
  return {200, {{"driver", c.params[0]}, {"lines", r.lines}, {"data", r.data}}};
}

// ---- routing

struct Route {
  std::string method;
  std::regex pattern;
  std::function<ApiResponse(Context&)> handler;
};

const std::vector<Route>& routes() {
  static const std::string id = "([^/]+)";
  static const std::vector<Route> table{
      {"GET", std::regex("/v1/resources"), list_resources},
      {"POST", std::regex("/v1/resources"), add_resource},
      {"GET", std::regex("/v1/resources/" + id), get_resource},
      {"DELETE", std::regex("/v1/resources/" + id), decommission_resource},
      {"POST", std::regex("/v1/resources/" + id + "/reclaim"), reclaim_resource},
      {"GET", std::regex("/v1/reservations"), list_reservations},
      {"POST", std::regex("/v1/reservations"), create_reservation},
      {"GET", std::regex("/v1/reservations/" + id), get_reservation},
      {"DELETE", std::regex("/v1/reservations/" + id), cancel_reservation},
      {"POST", std::regex("/v1/reservations/" + id + "/release"), release_reservation},
      {"POST", std::regex("/v1/batch"), submit_batch},
      {"GET", std::regex("/v1/availability"), availability},
      {"GET", std::regex("/v1/policies"), list_policies},
      {"POST", std::regex("/v1/policies"), install_policy},
      {"GET", std::regex("/v1/auctions"), list_auctions},
      {"POST", std::regex("/v1/auctions/" + id + "/bids"), place_bid},
      {"GET", std::regex("/v1/accounts/" + id + "/tokens"), get_tokens},
      {"POST", std::regex("/v1/accounts/" + id + "/tokens"), grant_tokens},
      {"POST", std::regex("/v1/telemetry/samples"), ingest_samples},
      {"GET", std::regex("/v1/reports/usage"), usage_report},
      {"GET", std::regex("/v1/offers"), list_offers},
      {"POST", std::regex("/v1/offers/" + id + "/accept"), accept_offer},
      {"POST", std::regex("/v1/offers/" + id + "/decline"), decline_offer},
      {"GET", std::regex("/v1/events"), list_events},
      {"GET", std::regex("/v1/notifications"), list_notifications},
      {"GET", std::regex("/v1/clock"), get_clock},
      {"POST", std::regex("/v1/clock"), set_clock},
      {"POST", std::regex("/v1/tick"), tick},
      {"GET", std::regex("/v1/me"), whoami},
      {"GET", std::regex("/v1/drivers"), list_drivers},
      {"POST", std::regex("/v1/driver/" + id + "/exec"), exec_driver},
  };
  return table;
}

}  // namespace

ApiResponse handle_request(Service& service, const ApiRequest& req) {
  try {
    const Route* match = nullptr;
    Params params;
    bool path_known = false;
    for (const auto& r : routes()) {
      std::smatch m;
      if (!std::regex_match(req.path, m, r.pattern)) continue;
      path_known = true;
      if (r.method != req.method) continue;
      match = &r;
      for (std::size_t i = 1; i < m.size(); ++i) params.push_back(m[i].str());
      break;
    }
    if (!match) {
      return path_known ? ApiResponse{405, error_document(ErrorCode::invalid_request, "method not allowed")}
                        : ApiResponse{404, error_document(ErrorCode::unknown_id, "no route for " + req.path)};
    }
    auto who = service.authenticate(req.bearer);
    if (!who) return fail(ErrorCode::unauthorized, "missing or unknown bearer token");

    json body = json::object();
    bool is_text = req.content_type.rfind("text/plain", 0) == 0;
    if (!req.body.empty() && !is_text) {
      body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) return fail(ErrorCode::invalid_request, "request body is not valid JSON");
    }
    Context c{service, req, *who, std::move(params), std::move(body)};
    return match->handler(c);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const json::exception& e) {
    return fail(ErrorCode::invalid_request, std::string("malformed request: ") + e.what());
  } catch (const std::exception& e) {
    return {500, error_document(ErrorCode::invalid_request, e.what())};
  }
}

}  // namespace shary::service
