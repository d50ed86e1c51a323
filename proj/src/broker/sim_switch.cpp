#include "shary/broker/sim_switch.hpp"

#include "shary/error.hpp"

namespace shary::broker {

namespace {

std::string join(const std::set<std::string>& s) {
  std::string out;
  for (const auto& x : s) out += (out.empty() ? "" : ",") + x;
  return out.empty() ? "-" : out;
}

void need(const ExecRequest& req, std::size_t n, const char* usage) {
  if (req.args.size() != n) throw Error(ErrorCode::invalid_request, std::string("usage: ") + usage);
}

}  // namespace

std::vector<std::string> SimSwitchDriver::capabilities() const {
  return {"grant", "revoke", "terminate_best_effort", "login", "logout", "install_program", "status", "admin-grant"};
}

SimSwitchDriver::Switch& SimSwitchDriver::sw(const std::string& id) {
  if (!resources_.count(id)) throw Error(ErrorCode::unknown_resource, "driver '" + this->id() + "' has no switch '" + id + "'");
  return switches_[id];
}

bool SimSwitchDriver::may_login(const std::string& user, const std::string& id) const {
  if (has_grant(user, id, 0)) return true;
  auto it = switches_.find(id);
  return it != switches_.end() && it->second.overrides.count(user);
}

std::set<SessionKey> SimSwitchDriver::sessions() const {
  std::set<SessionKey> out;
  for (const auto& [id, s] : switches_)
    for (const auto& u : s.logins) out.insert(SessionKey{u, id, 0});
  return out;
}

void SimSwitchDriver::terminate(const SessionKey& session) {
  auto it = switches_.find(session.resource);
  if (it == switches_.end()) return;
  it->second.logins.erase(session.user);
  it->second.overrides.erase(session.user);
}

ExecResult SimSwitchDriver::run(const ExecRequest& req) {
  const std::string& verb = req.args[0];
  ExecResult r;
  if (verb == "login") {
    need(req, 2, "login <switch>");
    require_user(req.user);
    Switch& s = sw(req.args[1]);
    if (!may_login(req.user, req.args[1]))
      throw Error(ErrorCode::no_grant, "user '" + req.user + "' holds no grant on " + req.args[1]);
    s.logins.insert(req.user);
    r.lines.push_back(req.user + " logged in to " + req.args[1]);
  } else if (verb == "logout") {
    need(req, 2, "logout <switch>");
    sw(req.args[1]).logins.erase(req.user);
    r.lines.push_back(req.user + " logged out of " + req.args[1]);
  } else if (verb == "install_program") {
    need(req, 3, "install_program <switch> <program>");
    require_user(req.user);
    Switch& s = sw(req.args[1]);
    if (!may_login(req.user, req.args[1]))
      throw Error(ErrorCode::no_grant, "user '" + req.user + "' holds no grant on " + req.args[1]);
    ++s.generation;
    s.program = req.args[2];
    s.installed_by = req.user;
    for (const auto& other : s.logins)
      if (other != req.user) s.disrupted.insert(other);
    r.lines.push_back("installed " + req.args[2] + " on " + req.args[1] + " generation " +
                      std::to_string(s.generation));
    r.data["generation"] = s.generation;
  } else if (verb == "status") {
    need(req, 2, "status <switch>");
    Switch& s = sw(req.args[1]);
    r.lines.push_back(req.args[1] + " generation " + std::to_string(s.generation) + " program " +
                      s.program.value_or("-"));
    r.lines.push_back("logins " + join(s.logins));
    r.lines.push_back("disrupted " + join(s.disrupted));
    r.data = {{"generation", s.generation},
              {"program", s.program ? nlohmann::json(*s.program) : nlohmann::json()},
              {"logins", s.logins},
              {"disrupted", s.disrupted}};
  } else if (verb == "admin-grant") {
    need(req, 3, "admin-grant <switch> <user>");
    if (!req.admin) throw Error(ErrorCode::forbidden, "admin-grant requires an administrator");
    require_user(req.args[2]);
    sw(req.args[1]).overrides.insert(req.args[2]);
    r.lines.push_back("override granted to " + req.args[2] + " on " + req.args[1]);
  } else {
    throw Error(ErrorCode::unknown_verb, "sim-p4 has no verb '" + verb + "'");
  }
  return r;
}

nlohmann::json SimSwitchDriver::driver_state() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [id, s] : switches_)
    out[id] = {{"logins", s.logins},
               {"disrupted", s.disrupted},
               {"overrides", s.overrides},
               {"generation", s.generation},
               {"program", s.program ? nlohmann::json(*s.program) : nlohmann::json()},
               {"installed_by", s.installed_by ? nlohmann::json(*s.installed_by) : nlohmann::json()}};
  return out;
}

void SimSwitchDriver::load_driver_state(const nlohmann::json& doc) {
  switches_.clear();
  for (const auto& [id, j] : doc.items()) {
    Switch s;
    s.logins = j.at("logins").get<std::set<std::string>>();
    s.disrupted = j.at("disrupted").get<std::set<std::string>>();
    s.overrides = j.value("overrides", std::set<std::string>{});
    s.generation = j.at("generation").get<std::uint64_t>();
    if (!j.at("program").is_null()) s.program = j["program"].get<std::string>();
    if (j.contains("installed_by") && !j["installed_by"].is_null()) s.installed_by = j["installed_by"].get<std::string>();
    switches_[id] = std::move(s);
  }
}

}  // namespace shary::broker
