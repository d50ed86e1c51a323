#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "shary/broker/driver.hpp"
#include "shary/catalog/catalog.hpp"

namespace shary::broker {

/// A simulated fleet of remote nodes hosting GPU instances. Instances live in per-user projects and a user only
/// ever sees their own projects. A GPU unit attaches to at most one instance, and only for a user holding a grant
/// on that unit.
class SimGpuDriver final : public Driver {
 public:
  struct Instance {
    std::string name;
    std::string owner;
    std::string project;
    std::string remote;
    std::string profile;
    bool running = false;
    std::set<catalog::ResourceUnit> gpus;

    bool operator==(const Instance&) const = default;
  };

  SimGpuDriver(std::string id, const nlohmann::json& parameters);
  std::string_view type() const override { return "sim-gpu"; }
  std::vector<std::string> capabilities() const override;

 protected:
  std::set<SessionKey> sessions() const override;
  void terminate(const SessionKey& session) override;
  ExecResult run(const ExecRequest& req) override;
  nlohmann::json driver_state() const override;
  void load_driver_state(const nlohmann::json& doc) override;

 private:
  ExecResult instance_verb(const ExecRequest& req);
  ExecResult gpu_verb(const ExecRequest& req);
  ExecResult profile_verb(const ExecRequest& req);
  ExecResult user_verb(const ExecRequest& req);
  ExecResult project_verb(const ExecRequest& req);
  ExecResult remote_verb(const ExecRequest& req);

  Instance& visible_instance(const ExecRequest& req, const std::string& name);
  std::set<std::string>& projects_of(const std::string& user);

  std::set<std::string> remotes_;
  std::map<std::string, std::set<std::string>> projects_;  // user -> project names
  std::map<std::string, Instance> instances_;
  std::map<std::string, std::string> profiles_;             // name -> description
  std::map<catalog::ResourceUnit, std::string> attached_;   // unit -> instance
};

}  // namespace shary::broker
