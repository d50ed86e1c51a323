#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "shary/broker/driver.hpp"

namespace shary::broker {

/// Login control for exclusive-slot P4 switches. Installing a program reconfigures every pipeline, so any other
/// tenant logged in at that moment is marked disrupted.
class SimSwitchDriver final : public Driver {
 public:
  struct Switch {
    std::set<std::string> logins;
    std::set<std::string> disrupted;
    std::set<std::string> overrides;  // admin-granted logins outside the reservation calendar
    std::uint64_t generation = 0;
    std::optional<std::string> program;
    std::optional<std::string> installed_by;

    bool operator==(const Switch&) const = default;
  };

  using Driver::Driver;
  std::string_view type() const override { return "sim-p4"; }
  std::vector<std::string> capabilities() const override;

 protected:
  std::set<SessionKey> sessions() const override;
  void terminate(const SessionKey& session) override;
  ExecResult run(const ExecRequest& req) override;
  nlohmann::json driver_state() const override;
  void load_driver_state(const nlohmann::json& doc) override;

 private:
  Switch& sw(const std::string& id);
  bool may_login(const std::string& user, const std::string& id) const;

  std::map<std::string, Switch> switches_;
};

}  // namespace shary::broker
