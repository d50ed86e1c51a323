#include "shary/service/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "shary/service/state_json.hpp"

namespace shary::service {

ApiResponse HttpApiClient::send(const std::string& method, const std::string& path,
                                const std::map<std::string, std::string>& query, const std::optional<json>& body,
                                const std::string& idempotency_key) {
  httplib::Client client(url_);
  client.set_read_timeout(60, 0);
  httplib::Headers headers{{"Authorization", "Bearer " + token_}};
  if (!idempotency_key.empty()) headers.emplace("Idempotency-Key", idempotency_key);
  httplib::Params params(query.begin(), query.end());
  std::string target = httplib::append_query_params(path, params);
  std::string payload = body ? body->dump() : std::string();

  httplib::Result res;
  if (method == "GET")
    res = client.Get(target, headers);
  else if (method == "POST")
    res = client.Post(target, headers, payload, "application/json");
  else if (method == "DELETE")
    res = client.Delete(target, headers);
  else
    throw Error(ErrorCode::invalid_request, "unsupported method " + method);
  if (!res) throw Error(ErrorCode::driver_unreachable, "cannot reach " + url_ + ": " + httplib::to_string(res.error()));

  ApiResponse out;
  out.status = res->status;
  out.body = json::parse(res->body, nullptr, false);
  if (out.body.is_discarded()) out.body = {{"raw", res->body}};
  for (const auto& [k, v] : res->headers) out.headers[k] = v;
  return out;
}

ApiResponse InProcessClient::send(const std::string& method, const std::string& path,
                                  const std::map<std::string, std::string>& query, const std::optional<json>& body,
                                  const std::string& idempotency_key) {
  ApiRequest r;
  r.method = method;
  r.path = path;
  r.query = query;
  r.bearer = token_;
  r.idempotency_key = idempotency_key;
  r.content_type = "application/json";
  if (body) r.body = body->dump();
  // Round-trip through text so both clients see the same document.
  ApiResponse res = handle_request(service_, r);
  res.body = json::parse(res.body.dump());
  return res;
}

namespace {

struct Failure {
  int code;
};

std::string text(const json& j) {
  if (j.is_null()) return "-";
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

std::string join_units(const json& units) {
  std::string s;
  for (const auto& u : units) s += (s.empty() ? "" : ",") + text(u);
  return s.empty() ? "-" : s;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_request, "cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::invalid_request, path + " is not valid JSON");
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_request, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Session {
 public:
  Session(ApiClient& client, std::ostream& out, std::ostream& err, bool raw, std::string idem)
      : client_(client), out_(out), err_(err), raw_(raw), idem_(std::move(idem)) {}

  /// Sends the call; prints errors and throws Failure on a non-2xx answer. With --json the raw document is echoed.
  json call(const std::string& method, const std::string& path, std::optional<json> body = std::nullopt,
            std::map<std::string, std::string> query = {}) {
    ApiResponse r = client_.send(method, path, query, body, method == "GET" ? std::string() : idem_);
    if (raw_) out_ << r.body.dump(2) << '\n';
    if (r.status >= 400) {
      const json& e = r.body.contains("error") ? r.body["error"] : json::object();
      err_ << "error: " << e.value("code", "http-" + std::to_string(r.status)) << ": " << e.value("message", "")
           << '\n';
      for (const auto& d : r.body.value("diagnostics", json::array()))
        err_ << "  " << d.value("line", 0) << ":" << d.value("column", 0) << ": " << d.value("message", "") << '\n';
      throw Failure{1};
    }
    if (!raw_)
      for (const auto& w : r.body.value("warnings", json::array())) err_ << "warning: " << text(w) << '\n';
    return r.body;
  }

  /// Line output, suppressed under --json.
  std::ostream& line() { return raw_ ? sink_ : out_; }

 private:
  ApiClient& client_;
  std::ostream& out_;
  std::ostream& err_;
  bool raw_;
  std::string idem_;
  std::ostringstream sink_;
};

void print_reservation(Session& s, const json& r) {
  s.line() << "reservation " << text(r["id"]) << ' ' << text(r["state"]) << '\n';
  s.line() << "  resource " << (r["resource"].get<std::string>().empty() ? "-" : text(r["resource"])) << " units "
           << join_units(r["units"]) << " " << text(r["start"]) << " " << text(r["end"]) << '\n';
  if (!r["auction"].is_null()) s.line() << "  auction " << text(r["auction"]) << '\n';
  if (r.contains("bid_rejection"))
    s.line() << "  bid rejected: " << text(r["bid_rejection"]["code"]) << ": " << text(r["bid_rejection"]["message"])
             << '\n';
}

void print_offer(Session& s, const json& o) {
  s.line() << "offer " << text(o["id"]) << ' ' << text(o["resource"]) << ' ' << text(o["start"]) << ' '
           << text(o["end"]) << " units " << join_units(o["units"]) << " expires " << text(o["expires_at"]) << ' '
           << text(o["state"]) << '\n';
}

std::map<std::string, std::string> window_query(const std::string& from, const std::string& to) {
  std::map<std::string, std::string> q;
  if (!from.empty()) q["start"] = from;
  if (!to.empty()) q["end"] = to;
  return q;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, ApiClient* client, std::ostream& out, std::ostream& err) {
  CLI::App app{"shary: resource sharing platform client", "shary"};
  app.require_subcommand(1);

  const char* env_url = std::getenv("SHARY_URL");
  const char* env_token = std::getenv("SHARY_TOKEN");
  std::string url = env_url ? env_url : "http://127.0.0.1:8080";
  std::string token = env_token ? env_token : "";
  std::string driver = "figo";
  std::string idem;
  bool raw = false;
  app.add_option("--url", url, "API endpoint (SHARY_URL)");
  app.add_option("--token", token, "bearer token (SHARY_TOKEN)");
  app.add_option("--driver", driver, "driver for pass-through verbs");
  app.add_option("--idempotency-key", idem, "de-duplication key for mutations");
  app.add_flag("--json", raw, "print the raw API document");

  // serve
  std::string config_path, data_dir, host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "run the API service");
  serve_cmd->add_option("--config", config_path, "service config JSON")->required();
  serve_cmd->add_option("--data-dir", data_dir, "event log directory (overrides the config)");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);

  // reservations
  std::string resource, from, to, duration, mode, tier, on_behalf, kind, deadline, at, subject, state;
  int units = 1;
  std::optional<long long> bid;
  double hours = 0;
  auto* reserve = app.add_subcommand("reserve", "request a reservation");
  reserve->add_option("--resource", resource)->required();
  reserve->add_option("--units", units);
  reserve->add_option("--from", from)->required();
  auto* to_opt = reserve->add_option("--to", to);
  auto* hours_opt = reserve->add_option("--hours", hours);
  auto* dur_opt = reserve->add_option("--duration", duration, "e.g. 90m, 2h");
  to_opt->excludes(hours_opt)->excludes(dur_opt);
  hours_opt->excludes(dur_opt);
  reserve->add_option("--mode", mode, "interactive or batch");
  reserve->add_option("--bid", bid);
  reserve->add_option("--tier", tier);
  reserve->add_option("--for", on_behalf, "book on behalf of a user (admin)");

  auto* list_res = app.add_subcommand("reservations", "list reservations");
  bool mine = false;
  list_res->add_flag("--mine", mine);
  list_res->add_option("--state", state);
  list_res->add_option("--resource", resource);

  std::uint64_t id = 0;
  auto* release = app.add_subcommand("release", "release an active reservation early");
  release->add_option("id", id)->required();
  release->add_option("--at", at);
  auto* cancel = app.add_subcommand("cancel", "cancel a queued or confirmed reservation");
  cancel->add_option("id", id)->required();

  auto* batch = app.add_subcommand("batch", "submit a batch job");
  batch->add_option("--kind", kind)->required();
  batch->add_option("--units", units);
  batch->add_option("--duration", duration)->required();
  batch->add_option("--deadline", deadline);

  // economy
  long long amount = 0;
  auto* bid_cmd = app.add_subcommand("bid", "bid tokens in an auction");
  bid_cmd->add_option("auction", id)->required();
  bid_cmd->add_option("amount", amount)->required();
  auto* auctions = app.add_subcommand("auctions", "list auctions");
  bool all = false;
  auctions->add_flag("--all", all, "include settled and void auctions");
  std::string account;
  auto* tokens = app.add_subcommand("tokens", "show a token account");
  tokens->add_option("user", account);

  // offers
  auto* offers = app.add_subcommand("offers", "last-minute offers");
  offers->add_flag("--all", all, "every state, not only open");
  auto* accept = offers->add_subcommand("accept", "accept an offer");
  accept->add_option("id", id)->required();
  auto* decline = offers->add_subcommand("decline", "decline an offer");
  decline->add_option("id", id)->required();

  // reports and feeds
  auto* report = app.add_subcommand("report", "usage report for a user or resource");
  report->add_option("--subject", subject);
  report->add_option("--from", from);
  report->add_option("--to", to);
  std::uint64_t since = 0;
  auto* events = app.add_subcommand("events", "event feed");
  events->add_option("--since", since);
  auto* notes = app.add_subcommand("notifications", "my notifications");

  // administration
  std::string file, name;
  auto* policy_cmd = app.add_subcommand("policy", "policies");
  policy_cmd->require_subcommand(1);
  auto* policy_install = policy_cmd->add_subcommand("install", "install a policy file");
  policy_install->add_option("file", file)->required();
  auto* policy_list = policy_cmd->add_subcommand("list", "list installed policies");
  auto* policy_show = policy_cmd->add_subcommand("show", "print a policy");
  policy_show->add_option("name", name)->required();

  auto* resource_cmd = app.add_subcommand("resource", "catalog");
  resource_cmd->require_subcommand(1);
  auto* resource_add = resource_cmd->add_subcommand("add", "enroll resources from a descriptor file");
  resource_add->add_option("file", file)->required();
  auto* resource_list = resource_cmd->add_subcommand("list", "list resources");
  bool retired = false;
  resource_list->add_flag("--retired", retired, "include retired resources");
  resource_list->add_option("--kind", kind);
  auto* resource_remove = resource_cmd->add_subcommand("remove", "decommission a resource");
  resource_remove->add_option("id", name)->required();
  auto* resource_reclaim = resource_cmd->add_subcommand("reclaim", "owner reclaim");
  resource_reclaim->add_option("id", name)->required();

  auto* ingest = app.add_subcommand("ingest", "push telemetry samples from a JSON file");
  ingest->add_option("file", file)->required();
  auto* clock = app.add_subcommand("clock", "show or set the service clock");
  std::string clock_to;
  auto* clock_set = clock->add_subcommand("set", "move the simulated clock forward");
  clock_set->add_option("time", clock_to)->required();
  auto* tick = app.add_subcommand("tick", "run periodic work now");

  // Global flags may follow a regular verb; pass-through verbs forward everything verbatim.
  std::function<void(CLI::App*)> allow_globals = [&](CLI::App* a) {
    for (auto* sub : a->get_subcommands({})) {
      sub->fallthrough();
      allow_globals(sub);
    }
  };
  allow_globals(&app);

  std::vector<CLI::App*> passthrough;
  for (const char* verb : {"instance", "gpu", "profile", "user", "remote", "project", "vpn"}) {
    auto* sub = app.add_subcommand(verb, std::string("driver verb '") + verb + "'");
    sub->prefix_command();
    sub->set_help_flag();
    passthrough.push_back(sub);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  if (serve_cmd->parsed()) return serve(config_path, data_dir, host, port, out, err);

  std::unique_ptr<HttpApiClient> owned;
  if (!client) {
    owned = std::make_unique<HttpApiClient>(url, token);
    client = owned.get();
  }
  Session s(*client, out, err, raw, idem);

  try {
    if (reserve->parsed()) {
      json body{{"resource", resource}, {"units", units}, {"start", from}};
      if (!to.empty())
        body["end"] = to;
      else if (!duration.empty())
        body["duration"] = duration;
      else if (*hours_opt)
        body["duration"] = static_cast<long long>(hours * 60);
      else
        throw Error(ErrorCode::invalid_request, "one of --to, --hours or --duration is required");
      if (!mode.empty()) body["mode"] = mode;
      if (bid) body["bid"] = *bid;
      if (!tier.empty()) body["tier"] = tier;
      if (!on_behalf.empty()) body["user"] = on_behalf;
      print_reservation(s, s.call("POST", "/v1/reservations", body));
    } else if (list_res->parsed()) {
      std::map<std::string, std::string> q;
      if (mine) q["mine"] = "1";
      if (!state.empty()) q["state"] = state;
      if (!resource.empty()) q["resource"] = resource;
      json doc = s.call("GET", "/v1/reservations", std::nullopt, q);
      for (const auto& r : doc["reservations"])
        s.line() << text(r["id"]) << ' ' << text(r["user"]) << ' '
                 << (r["resource"].get<std::string>().empty() ? "-" : text(r["resource"])) << ' ' << text(r["state"])
                 << ' ' << text(r["start"]) << ' ' << text(r["end"]) << " units " << join_units(r["units"]) << '\n';
    } else if (release->parsed()) {
      json body = json::object();
      if (!at.empty()) body["at"] = at;
      json doc = s.call("POST", "/v1/reservations/" + std::to_string(id) + "/release", body);
      s.line() << "reservation " << id << " released\n";
      s.line() << "  freed " << text(doc["freed"]["start"]) << ' ' << text(doc["freed"]["end"]) << '\n';
    } else if (cancel->parsed()) {
      s.call("DELETE", "/v1/reservations/" + std::to_string(id));
      s.line() << "reservation " << id << " cancelled\n";
    } else if (batch->parsed()) {
      json body{{"kind", kind}, {"units", units}, {"duration", duration}};
      if (!deadline.empty()) body["deadline"] = deadline;
      print_reservation(s, s.call("POST", "/v1/batch", body));
    } else if (bid_cmd->parsed()) {
      json doc = s.call("POST", "/v1/auctions/" + std::to_string(id) + "/bids", json{{"amount", amount}});
      s.line() << "bid " << amount << " placed on auction " << id << " (deadline " << text(doc["deadline"]) << ")\n";
    } else if (auctions->parsed()) {
      json doc = s.call("GET", "/v1/auctions", std::nullopt, {{"state", all ? "all" : "open"}});
      for (const auto& a : doc["auctions"]) {
        s.line() << "auction " << text(a["id"]) << ' ' << text(a["resource"]) << ' ' << text(a["start"])
                 << ' ' << text(a["end"]) << ' ' << text(a["state"]) << " deadline " << text(a["deadline"])
                 << " bids " << text(a["bid_count"]);
        if (!a["winner"].is_null()) s.line() << " winner " << text(a["winner"]) << " price " << text(a["price"]);
        s.line() << '\n';
      }
    } else if (tokens->parsed()) {
      std::string who = account;
      if (who.empty()) who = s.call("GET", "/v1/me")["user"].get<std::string>();
      json doc = s.call("GET", "/v1/accounts/" + who + "/tokens");
      s.line() << who << " balance " << text(doc["balance"]) << '\n';
      for (const auto& e : doc["entries"])
        s.line() << "  " << text(e["ts"]) << ' ' << text(e["delta"]) << ' ' << text(e["reason"]) << ' '
                 << text(e["ref"]) << '\n';
    } else if (accept->parsed()) {
      json doc = s.call("POST", "/v1/offers/" + std::to_string(id) + "/accept", json::object());
      print_reservation(s, doc);
    } else if (decline->parsed()) {
      s.call("POST", "/v1/offers/" + std::to_string(id) + "/decline", json::object());
      s.line() << "offer " << id << " declined\n";
    } else if (offers->parsed()) {
      json doc = s.call("GET", "/v1/offers", std::nullopt, {{"state", all ? "all" : "open"}});
      if (doc["offers"].empty()) s.line() << "no offers\n";
      for (const auto& o : doc["offers"]) print_offer(s, o);
    } else if (report->parsed()) {
      auto q = window_query(from, to);
      if (!subject.empty()) q["subject"] = subject;
      json doc = s.call("GET", "/v1/reports/usage", std::nullopt, q);
      s.line() << "subject " << text(doc["subject"]) << " (" << text(doc["kind"]) << ")\n";
      s.line() << "window " << text(doc["window"]["start"]) << ' ' << text(doc["window"]["end"]) << '\n';
      for (const auto& [k, v] : doc.items())
        if (k != "subject" && k != "window" && k != "kind") s.line() << k << ' ' << text(v) << '\n';
    } else if (events->parsed()) {
      json doc = s.call("GET", "/v1/events", std::nullopt, {{"since", std::to_string(since)}});
      for (const auto& e : doc["events"])
        s.line() << text(e["seq"]) << ' ' << text(e["ts"]) << ' ' << text(e["kind"]) << ' ' << text(e["actor"])
                 << '\n';
    } else if (notes->parsed()) {
      json doc = s.call("GET", "/v1/notifications");
      for (const auto& n : doc["notifications"])
        s.line() << text(n["id"]) << ' ' << text(n["created_at"]) << ' ' << text(n["kind"]) << ' '
                 << text(n["channel"]) << ' ' << (n.value("delivered", false) ? "delivered" : "pending") << ": "
                 << text(n["subject"]) << '\n';
    } else if (policy_install->parsed()) {
      json doc = s.call("POST", "/v1/policies", json{{"source", read_text_file(file)}});
      s.line() << "policy " << text(doc["name"]) << (doc["event_seq"].is_null() ? " unchanged" : " installed") << '\n';
    } else if (policy_list->parsed()) {
      json listing = s.call("GET", "/v1/policies");
      for (const auto& p : listing["policies"]) s.line() << text(p["name"]) << '\n';
    } else if (policy_show->parsed()) {
      bool found = false;
      json listing = s.call("GET", "/v1/policies");
      for (const auto& p : listing["policies"])
        if (p["name"] == name) {
          s.line() << text(p["source"]);
          found = true;
        }
      if (!found) throw Error(ErrorCode::unknown_id, "no policy named '" + name + "'");
    } else if (resource_add->parsed()) {
      json doc = read_json_file(file);
      json list = doc.is_array() ? doc : json::array({doc});
      for (const auto& d : list) {
        json r = s.call("POST", "/v1/resources", d);
        s.line() << "resource " << text(r["id"]) << " registered\n";
      }
    } else if (resource_list->parsed()) {
      std::map<std::string, std::string> q;
      if (retired) q["include_retired"] = "1";
      if (!kind.empty()) q["kind"] = kind;
      json listing = s.call("GET", "/v1/resources", std::nullopt, q);
      for (const auto& r : listing["resources"])
        s.line() << text(r["id"]) << ' ' << text(r["kind"]) << ' ' << text(r["site"]) << " units " << text(r["units"])
                 << " driver " << text(r["driver"]) << (r.value("retired", false) ? " retired" : "") << '\n';
    } else if (resource_remove->parsed()) {
      s.call("DELETE", "/v1/resources/" + name);
      s.line() << "resource " << name << " decommissioned\n";
    } else if (resource_reclaim->parsed()) {
      json doc = s.call("POST", "/v1/resources/" + name + "/reclaim", json::object());
      for (const auto& a : doc.value("actions", json::array()))
        s.line() << "reservation " << text(a["reservation"]) << ' ' << text(a["phase"]) << " at " << text(a["fire_at"])
                 << '\n';
    } else if (ingest->parsed()) {
      json doc = read_json_file(file);
      json body = doc.is_array() ? json{{"samples", doc}} : doc;
      json r = s.call("POST", "/v1/telemetry/samples", body);
      s.line() << "accepted " << text(r["accepted"]) << " rejected " << text(r["rejected"]) << '\n';
    } else if (clock->parsed()) {
      json doc = clock_to.empty() ? s.call("GET", "/v1/clock") : s.call("POST", "/v1/clock", json{{"now", clock_to}});
      s.line() << "now " << text(doc["now"]) << '\n';
    } else if (tick->parsed()) {
      json doc = s.call("POST", "/v1/tick", json::object());
      s.line() << "tick" << (doc["event_seq"].is_null() ? " (no changes)" : " seq " + text(doc["event_seq"])) << '\n';
    } else {
      for (auto* sub : passthrough) {
        if (!sub->parsed()) continue;
        json body{{"args", json::array({sub->get_name()})}};
        for (const auto& a : sub->remaining()) body["args"].push_back(a);
        json doc = s.call("POST", "/v1/driver/" + driver + "/exec", body);
        for (const auto& l : doc["lines"]) s.line() << text(l) << '\n';
      }
    }
  } catch (const Failure& f) {
    return f.code;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int serve(const std::string& config_path, const std::string& data_dir, const std::string& host, int port,
          std::ostream& out, std::ostream& err) {
  try {
    std::filesystem::path path(config_path);
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_request, "cannot read " + config_path);
    json doc = json::parse(in);
    ServiceConfig cfg = service_config_from_json(doc, path.parent_path());
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    cfg.webhook = std::make_shared<WebhookTransport>();

    // Block the shutdown signals before any thread starts so they reach sigwait below.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Service service(std::move(cfg));
    service.start();
    ApiServer server(service);
    int bound = server.bind(host, port);
    server.start();
    out << "listening on " << host << ':' << bound << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    service.stop();
    out << "stopped" << std::endl;
    return 0;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace shary::service
