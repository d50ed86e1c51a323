#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shary/broker/grant.hpp"

namespace shary::broker {

struct ExecRequest {
  std::string user;
  bool admin = false;
  std::vector<std::string> args;  // verb path then operands: {"gpu", "add", "box", "l40s-cluster/2"}
};

struct ExecResult {
  std::vector<std::string> lines;  // stable, line-oriented output
  nlohmann::json data = nlohmann::json::object();
};

/// The adaptation-layer seam. Every public call is serialized by the driver's own lock, so the broker worker
/// and pass-through verb calls from the API may interleave safely. Unreachable drivers throw driver-unreachable.
class Driver {
 public:
  explicit Driver(std::string id) : id_(std::move(id)) {}
  virtual ~Driver() = default;

  Driver(const Driver&) = delete;
  Driver& operator=(const Driver&) = delete;

  const std::string& id() const { return id_; }
  virtual std::string_view type() const = 0;
  virtual std::vector<std::string> capabilities() const = 0;

  DriverSnapshot snapshot() const;
  void apply(const DriverAction& action);
  ExecResult execute(const ExecRequest& req);

  nlohmann::json state_document() const;
  void load_state(const nlohmann::json& doc);

  /// Resources (with unit counts) this driver controls, and the users it recognizes.
  void bind(const std::map<std::string, int>& resources);
  void set_users(std::set<std::string> users);

  /// Fault injection.
  void set_reachable(bool reachable);
  bool reachable() const;

 protected:
  virtual std::set<SessionKey> sessions() const = 0;
  virtual void terminate(const SessionKey& session) = 0;
  virtual ExecResult run(const ExecRequest& req) = 0;
  virtual nlohmann::json driver_state() const = 0;
  virtual void load_driver_state(const nlohmann::json& doc) = 0;

  bool has_grant(const std::string& user, const std::string& resource, int unit) const;
  /// Parses "resource/index", or a bare index when exactly one resource is bound. Throws invalid-request.
  std::pair<std::string, int> parse_unit(const std::string& text) const;
  void require_user(const std::string& user) const;

  std::map<std::string, int> resources_;
  std::set<std::string> users_;
  GrantSet grants_;

 private:
  void check_reachable() const;

  std::string id_;
  bool reachable_ = true;
  mutable std::mutex mu_;
};

/// Accepts grants and records them; no sessions and no verbs. Catalog-only resources bind to it.
class SimNullDriver final : public Driver {
 public:
  using Driver::Driver;
  std::string_view type() const override { return "sim-null"; }
  std::vector<std::string> capabilities() const override { return {"grant", "revoke"}; }

 protected:
  std::set<SessionKey> sessions() const override { return {}; }
  void terminate(const SessionKey&) override {}
  ExecResult run(const ExecRequest& req) override;
  nlohmann::json driver_state() const override { return nlohmann::json::object(); }
  void load_driver_state(const nlohmann::json&) override {}
};

/// Driver registry entry: {"id", "type" in {sim-gpu, sim-p4, sim-null}, "parameters"}.
struct DriverConfig {
  std::string id;
  std::string type;
  nlohmann::json parameters = nlohmann::json::object();
};

std::vector<DriverConfig> parse_driver_registry(const nlohmann::json& doc);
/// Throws unknown-driver for an unsupported type.
std::unique_ptr<Driver> make_driver(const DriverConfig& config);

}  // namespace shary::broker
