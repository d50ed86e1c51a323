#include "shary/broker/sim_gpu.hpp"

#include "shary/error.hpp"

namespace shary::broker {

namespace {

const std::string kDefaultProject = "default";

void need(const ExecRequest& req, std::size_t n, const char* usage) {
  if (req.args.size() != n) throw Error(ErrorCode::invalid_request, std::string("usage: ") + usage);
}

/// Splits trailing "--key value" options off the operands.
std::map<std::string, std::string> options(const std::vector<std::string>& args, std::size_t from,
                                           std::vector<std::string>& operands) {
  std::map<std::string, std::string> opts;
  for (std::size_t i = from; i < args.size(); ++i) {
    if (args[i].rfind("--", 0) == 0) {
      if (i + 1 >= args.size()) throw Error(ErrorCode::invalid_request, "option " + args[i] + " needs a value");
      opts[args[i].substr(2)] = args[i + 1];
      ++i;
    } else {
      operands.push_back(args[i]);
    }
  }
  return opts;
}

std::string unit_name(const catalog::ResourceUnit& u) { return u.resource + "/" + std::to_string(u.index); }

}  // namespace

SimGpuDriver::SimGpuDriver(std::string id, const nlohmann::json& parameters) : Driver(std::move(id)) {
  if (parameters.contains("remotes"))
    for (const auto& r : parameters["remotes"]) remotes_.insert(r.get<std::string>());
  profiles_["default"] = "base instance profile";
  profiles_["gpu"] = "instance profile with GPU passthrough";
}

std::vector<std::string> SimGpuDriver::capabilities() const {
  return {"grant",  "revoke", "terminate_best_effort", "instance", "gpu", "profile",
          "user",   "project", "remote",               "vpn"};
}

std::set<SessionKey> SimGpuDriver::sessions() const {
  std::set<SessionKey> out;
  for (const auto& [unit, inst] : attached_)
    out.insert(SessionKey{instances_.at(inst).owner, unit.resource, unit.index});
  return out;
}

void SimGpuDriver::terminate(const SessionKey& session) {
  catalog::ResourceUnit unit{session.resource, session.unit};
  auto it = attached_.find(unit);
  if (it == attached_.end()) return;
  Instance& inst = instances_.at(it->second);
  if (inst.owner != session.user) return;
  inst.gpus.erase(unit);
  attached_.erase(it);
}

std::set<std::string>& SimGpuDriver::projects_of(const std::string& user) {
  auto [it, fresh] = projects_.try_emplace(user);
  if (fresh) it->second.insert(kDefaultProject);
  return it->second;
}

SimGpuDriver::Instance& SimGpuDriver::visible_instance(const ExecRequest& req, const std::string& name) {
  auto it = instances_.find(name);
  if (it == instances_.end() || (!req.admin && it->second.owner != req.user))
    throw Error(ErrorCode::unknown_instance, "unknown instance '" + name + "'");
  return it->second;
}

ExecResult SimGpuDriver::run(const ExecRequest& req) {
  const std::string& domain = req.args[0];
  if (domain == "vpn") {
    ExecResult r;
    r.lines.push_back("vpn: not implemented (stub)");
    return r;
  }
  static const std::set<std::string> kDomains{"instance", "gpu", "profile", "user", "project", "remote"};
  if (!kDomains.count(domain)) throw Error(ErrorCode::unknown_verb, "sim-gpu has no verb '" + domain + "'");
  if (req.args.size() < 2) throw Error(ErrorCode::invalid_request, "usage: " + domain + " <verb> ...");
  if (domain == "instance") return instance_verb(req);
  if (domain == "gpu") return gpu_verb(req);
  if (domain == "profile") return profile_verb(req);
  if (domain == "user") return user_verb(req);
  if (domain == "project") return project_verb(req);
  if (domain == "remote") return remote_verb(req);
  throw Error(ErrorCode::unknown_verb, "sim-gpu has no verb '" + domain + "'");
}

ExecResult SimGpuDriver::instance_verb(const ExecRequest& req) {
  const std::string& verb = req.args[1];
  ExecResult r;
  if (verb == "list") {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [name, inst] : instances_) {
      if (!req.admin && inst.owner != req.user) continue;
      std::string gpus;
      for (const auto& u : inst.gpus) gpus += (gpus.empty() ? "" : ",") + unit_name(u);
      r.lines.push_back(name + " " + (inst.running ? "running" : "stopped") + " " + inst.project + " " +
                        inst.remote + " gpus=" + (gpus.empty() ? "-" : gpus));
      list.push_back({{"name", name}, {"running", inst.running}, {"project", inst.project},
                      {"remote", inst.remote}, {"gpus", inst.gpus.size()}});
    }
    r.data["instances"] = list;
    return r;
  }
  if (verb == "create") {
    require_user(req.user);
    std::vector<std::string> operands;
    auto opts = options(req.args, 2, operands);
    if (operands.size() != 1)
      throw Error(ErrorCode::invalid_request,
                  "usage: instance create <name> [--remote r] [--project p] [--profile x]");
    const std::string& name = operands[0];
    if (instances_.count(name)) throw Error(ErrorCode::duplicate_name, "instance '" + name + "' already exists");
    std::string remote = opts.count("remote") ? opts["remote"] : (remotes_.empty() ? "" : *remotes_.begin());
    if (!remotes_.count(remote)) throw Error(ErrorCode::unknown_remote, "unknown remote '" + remote + "'");
    std::string project = opts.count("project") ? opts["project"] : kDefaultProject;
    if (!projects_of(req.user).count(project))
      throw Error(ErrorCode::unknown_project, "unknown project '" + project + "'");
    std::string profile = opts.count("profile") ? opts["profile"] : "default";
    if (!profiles_.count(profile)) throw Error(ErrorCode::unknown_profile, "unknown profile '" + profile + "'");
    instances_[name] = Instance{name, req.user, project, remote, profile, true, {}};
    r.lines.push_back("instance " + name + " running on " + remote);
    return r;
  }
  if (verb == "start" || verb == "stop" || verb == "delete") {
    need(req, 3, "instance start|stop|delete <name>");
    Instance& inst = visible_instance(req, req.args[2]);
    if (verb == "delete") {
      for (const auto& u : inst.gpus) attached_.erase(u);
      std::string name = inst.name;
      instances_.erase(name);
      r.lines.push_back("instance " + name + " deleted");
    } else {
      inst.running = verb == "start";
      r.lines.push_back("instance " + inst.name + " " + (inst.running ? "running" : "stopped"));
    }
    return r;
  }
  throw Error(ErrorCode::unknown_verb, "unknown verb 'instance " + verb + "'");
}

ExecResult SimGpuDriver::gpu_verb(const ExecRequest& req) {
  const std::string& verb = req.args[1];
  if (verb != "add" && verb != "remove") throw Error(ErrorCode::unknown_verb, "unknown verb 'gpu " + verb + "'");
  need(req, 4, "gpu add|remove <instance> <resource/unit>");
  Instance& inst = visible_instance(req, req.args[2]);
  auto [resource, index] = parse_unit(req.args[3]);
  catalog::ResourceUnit unit{resource, index};
  ExecResult r;
  if (verb == "add") {
    if (!has_grant(inst.owner, resource, index))
      throw Error(ErrorCode::no_grant, "user '" + inst.owner + "' holds no grant on " + unit_name(unit));
    if (auto it = attached_.find(unit); it != attached_.end())
      throw Error(ErrorCode::unit_already_attached, unit_name(unit) + " is attached to another instance");
    attached_[unit] = inst.name;
    inst.gpus.insert(unit);
    r.lines.push_back(unit_name(unit) + " attached to " + inst.name);
  } else {
    auto it = attached_.find(unit);
    if (it == attached_.end() || it->second != inst.name)
      throw Error(ErrorCode::invalid_state, unit_name(unit) + " is not attached to " + inst.name);
    attached_.erase(it);
    inst.gpus.erase(unit);
    r.lines.push_back(unit_name(unit) + " detached from " + inst.name);
  }
  r.data["gpus"] = inst.gpus.size();
  return r;
}

ExecResult SimGpuDriver::profile_verb(const ExecRequest& req) {
  const std::string& verb = req.args[1];
  ExecResult r;
  if (verb == "list") {
    for (const auto& [name, desc] : profiles_) r.lines.push_back(name);
    r.data["profiles"] = profiles_;
  } else if (verb == "copy") {
    need(req, 4, "profile copy <source> <name>");
    auto it = profiles_.find(req.args[2]);
    if (it == profiles_.end()) throw Error(ErrorCode::unknown_profile, "unknown profile '" + req.args[2] + "'");
    if (profiles_.count(req.args[3]))
      throw Error(ErrorCode::duplicate_name, "profile '" + req.args[3] + "' already exists");
    profiles_[req.args[3]] = it->second;
    r.lines.push_back("profile " + req.args[3] + " copied from " + req.args[2]);
  } else if (verb == "delete") {
    need(req, 3, "profile delete <name>");
    if (!profiles_.erase(req.args[2]))
      throw Error(ErrorCode::unknown_profile, "unknown profile '" + req.args[2] + "'");
    r.lines.push_back("profile " + req.args[2] + " deleted");
  } else {
    throw Error(ErrorCode::unknown_verb, "unknown verb 'profile " + verb + "'");
  }
  return r;
}

ExecResult SimGpuDriver::user_verb(const ExecRequest& req) {
  if (req.args[1] != "add") throw Error(ErrorCode::unknown_verb, "unknown verb 'user " + req.args[1] + "'");
  need(req, 3, "user add <name>");
  if (!req.admin) throw Error(ErrorCode::forbidden, "user add requires an administrator");
  users_.insert(req.args[2]);
  projects_of(req.args[2]);
  ExecResult r;
  r.lines.push_back("user " + req.args[2] + " added");
  return r;
}

ExecResult SimGpuDriver::project_verb(const ExecRequest& req) {
  const std::string& verb = req.args[1];
  ExecResult r;
  if (verb == "list") {
    // Another user's projects are invisible: listing them yields nothing.
    std::string whose = req.args.size() > 2 ? req.args[2] : req.user;
    std::set<std::string> shown;
    if (whose == req.user || req.admin) shown = projects_of(whose);
    for (const auto& p : shown) r.lines.push_back(p);
    r.data["projects"] = shown;
    return r;
  }
  need(req, 3, "project create|delete <name>");
  require_user(req.user);
  auto& mine = projects_of(req.user);
  const std::string& name = req.args[2];
  if (verb == "create") {
    if (!mine.insert(name).second) throw Error(ErrorCode::duplicate_name, "project '" + name + "' already exists");
    r.lines.push_back("project " + name + " created");
  } else if (verb == "delete") {
    if (!mine.count(name)) throw Error(ErrorCode::unknown_project, "unknown project '" + name + "'");
    for (const auto& [n, inst] : instances_)
      if (inst.owner == req.user && inst.project == name)
        throw Error(ErrorCode::invalid_state, "project '" + name + "' still holds instance '" + n + "'");
    mine.erase(name);
    r.lines.push_back("project " + name + " deleted");
  } else {
    throw Error(ErrorCode::unknown_verb, "unknown verb 'project " + verb + "'");
  }
  return r;
}

ExecResult SimGpuDriver::remote_verb(const ExecRequest& req) {
  const std::string& verb = req.args[1];
  ExecResult r;
  if (verb == "list") {
    for (const auto& x : remotes_) r.lines.push_back(x);
    r.data["remotes"] = remotes_;
  } else if (verb == "enroll") {
    need(req, 3, "remote enroll <name>");
    if (!req.admin) throw Error(ErrorCode::forbidden, "remote enroll requires an administrator");
    if (!remotes_.insert(req.args[2]).second)
      throw Error(ErrorCode::duplicate_name, "remote '" + req.args[2] + "' already enrolled");
    r.lines.push_back("remote " + req.args[2] + " enrolled");
  } else {
    throw Error(ErrorCode::unknown_verb, "unknown verb 'remote " + verb + "'");
  }
  return r;
}

nlohmann::json SimGpuDriver::driver_state() const {
  nlohmann::json inst = nlohmann::json::object();
  for (const auto& [name, i] : instances_) {
    nlohmann::json gpus = nlohmann::json::array();
    for (const auto& u : i.gpus) gpus.push_back(unit_name(u));
    inst[name] = {{"owner", i.owner},     {"project", i.project}, {"remote", i.remote},
                  {"profile", i.profile}, {"running", i.running}, {"gpus", gpus}};
  }
  return {{"remotes", remotes_}, {"projects", projects_}, {"profiles", profiles_}, {"instances", inst}};
}

void SimGpuDriver::load_driver_state(const nlohmann::json& doc) {
  remotes_ = doc.at("remotes").get<std::set<std::string>>();
  projects_ = doc.at("projects").get<std::map<std::string, std::set<std::string>>>();
  profiles_ = doc.at("profiles").get<std::map<std::string, std::string>>();
  instances_.clear();
  attached_.clear();
  for (const auto& [name, j] : doc.at("instances").items()) {
    Instance i{name,
               j.at("owner").get<std::string>(),
               j.at("project").get<std::string>(),
               j.at("remote").get<std::string>(),
               j.at("profile").get<std::string>(),
               j.at("running").get<bool>(),
               {}};
    for (const auto& g : j.at("gpus")) {
      std::string s = g.get<std::string>();
      auto slash = s.rfind('/');
      catalog::ResourceUnit u{s.substr(0, slash), std::stoi(s.substr(slash + 1))};
      i.gpus.insert(u);
      attached_[u] = name;
    }
    instances_[name] = std::move(i);
  }
}

}  // namespace shary::broker
