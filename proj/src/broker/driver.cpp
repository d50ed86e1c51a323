#include "shary/broker/driver.hpp"

#include <charconv>
#include <limits>

#include "shary/broker/sim_gpu.hpp"
#include "shary/broker/sim_switch.hpp"
#include "shary/error.hpp"

namespace shary::broker {

void Driver::check_reachable() const {
  if (!reachable_) throw Error(ErrorCode::driver_unreachable, "driver '" + id_ + "' is unreachable");
}

DriverSnapshot Driver::snapshot() const {
  std::lock_guard lock(mu_);
  check_reachable();
  return DriverSnapshot{grants_, sessions()};
}

void Driver::apply(const DriverAction& action) {
  std::lock_guard lock(mu_);
  check_reachable();
  switch (action.kind) {
    case ActionKind::grant: grants_.insert(action.target); break;
    case ActionKind::revoke: grants_.erase(action.target); break;
    case ActionKind::terminate_best_effort: terminate(session_of(action.target)); break;
  }
}

ExecResult Driver::execute(const ExecRequest& req) {
  std::lock_guard lock(mu_);
  check_reachable();
  if (req.args.empty()) throw Error(ErrorCode::unknown_verb, "missing verb");
  return run(req);
}

nlohmann::json Driver::state_document() const {
  std::lock_guard lock(mu_);
  nlohmann::json grants = nlohmann::json::array();
  for (const AccessGrant& g : grants_) grants.push_back(to_json(g));
  nlohmann::json sess = nlohmann::json::array();
  for (const SessionKey& s : sessions()) sess.push_back(to_json(s));
  return {{"id", id_},     {"type", type()},       {"reachable", reachable_}, {"resources", resources_},
          {"grants", grants}, {"sessions", sess}, {"state", driver_state()}};
}

void Driver::load_state(const nlohmann::json& doc) {
  std::lock_guard lock(mu_);
  grants_.clear();
  for (const auto& g : doc.at("grants")) grants_.insert(grant_from_json(g));
  if (doc.contains("state")) load_driver_state(doc.at("state"));
}

void Driver::bind(const std::map<std::string, int>& resources) {
  std::lock_guard lock(mu_);
  resources_ = resources;
}

void Driver::set_users(std::set<std::string> users) {
  std::lock_guard lock(mu_);
  users_ = std::move(users);
}

void Driver::set_reachable(bool reachable) {
  std::lock_guard lock(mu_);
  reachable_ = reachable;
}

bool Driver::reachable() const {
  std::lock_guard lock(mu_);
  return reachable_;
}

bool Driver::has_grant(const std::string& user, const std::string& resource, int unit) const {
  auto it = grants_.lower_bound(AccessGrant{user, resource, unit, {std::numeric_limits<Minute>::min(), 0}});
  return it != grants_.end() && it->user == user && it->resource == resource && it->unit == unit;
}

std::pair<std::string, int> Driver::parse_unit(const std::string& text) const {
  std::string resource;
  std::string index = text;
  if (auto slash = text.find('/'); slash != std::string::npos) {
    resource = text.substr(0, slash);
    index = text.substr(slash + 1);
  } else if (resources_.size() == 1) {
    resource = resources_.begin()->first;
  } else {
    throw Error(ErrorCode::invalid_request, "unit '" + text + "' must be written resource/index");
  }
  int unit = -1;
  auto [p, ec] = std::from_chars(index.data(), index.data() + index.size(), unit);
  auto it = resources_.find(resource);
  if (ec != std::errc() || p != index.data() + index.size() || it == resources_.end() || unit < 0 ||
      unit >= it->second)
    throw Error(ErrorCode::invalid_request, "no unit '" + text + "' on driver '" + id() + "'");
  return {resource, unit};
}

void Driver::require_user(const std::string& user) const {
  if (!users_.count(user)) throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
}

ExecResult SimNullDriver::run(const ExecRequest& req) {
  if (req.args[0] == "status") {
    ExecResult r;
    r.lines.push_back(id() + ": " + std::to_string(grants_.size()) + " grant(s)");
    r.data["grants"] = grants_.size();
    return r;
  }
  throw Error(ErrorCode::unknown_verb, "driver '" + id() + "' has no verb '" + req.args[0] + "'");
}

std::vector<DriverConfig> parse_driver_registry(const nlohmann::json& doc) {
  if (!doc.is_array()) throw Error(ErrorCode::invalid_request, "driver registry must be an array");
  std::vector<DriverConfig> out;
  for (const auto& e : doc) {
    if (!e.is_object() || !e.contains("id") || !e.contains("type") || !e["id"].is_string() || !e["type"].is_string())
      throw Error(ErrorCode::invalid_request, "driver entries need string 'id' and 'type'");
    DriverConfig c{e["id"].get<std::string>(), e["type"].get<std::string>()};
    if (e.contains("parameters")) c.parameters = e["parameters"];
    out.push_back(std::move(c));
  }
  return out;
}

std::unique_ptr<Driver> make_driver(const DriverConfig& config) {
  if (config.type == "sim-gpu") return std::make_unique<SimGpuDriver>(config.id, config.parameters);
  if (config.type == "sim-p4") return std::make_unique<SimSwitchDriver>(config.id);
  if (config.type == "sim-null") return std::make_unique<SimNullDriver>(config.id);
  throw Error(ErrorCode::unknown_driver, "unsupported driver type '" + config.type + "'");
}

}  // namespace shary::broker
