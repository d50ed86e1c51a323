#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "shary/broker/broker.hpp"
#include "shary/service/event_log.hpp"
#include "shary/service/platform.hpp"

namespace shary::service {

/// Static bearer-token table entry.
struct TokenEntry {
  std::string token;
  UserRecord user;
};

struct ServiceConfig {
  std::filesystem::path data_dir;  // empty: in-memory only
  PlatformConfig platform;
  std::vector<TokenEntry> tokens;
  std::vector<broker::DriverConfig> drivers;
  std::vector<catalog::ResourceDescriptor> seed;
  std::vector<std::string> policies;

  bool sim_clock = true;
  Minute start_time = 0;
  std::chrono::milliseconds broker_tick{60'000};
  bool background = true;  // broker loop, notification dispatcher, wall-clock ticker

  std::shared_ptr<Transport> webhook;
  std::shared_ptr<Transport> email;
};

/// Loads {"tokens": [...], "drivers": [...], "seed": [...], "policies": [...], ...} from a config document.
/// Relative file references are resolved against `base`.
ServiceConfig service_config_from_json(const json& doc, const std::filesystem::path& base);

struct Principal {
  std::string user;
  bool admin = false;
};

/// The single writer. Mutations serialize on an exclusive lock; queries share it.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void start();
  void stop();

  std::optional<Principal> authenticate(const std::string& bearer) const;

  /// Stamps the command with the service clock and executes it.
  CommandResult submit(Command cmd);

  template <class F>
  auto read(F&& f) const {
    std::shared_lock lock(mu_);
    return f(static_cast<const Platform&>(*platform_));
  }

  Minute now() const;
  bool sim_clock() const { return config_.sim_clock; }
  /// Sim-clock mode only: moves time forward, ticks, and reconciles drivers. Throws invalid-request otherwise.
  void set_clock(Minute t);

  broker::Broker& broker() { return broker_; }
  broker::StoreView store_view() const;
  std::vector<broker::PassReport> reconcile_now();
  broker::ExecResult exec_driver(const std::string& driver, const Principal& who, std::vector<std::string> args);

  /// Delivers every pending webhook/email notification and records the outcomes.
  std::size_t dispatch_notifications();

  const ServiceConfig& config() const { return config_; }

 private:
  void bootstrap();
  void on_event(const Event& e);
  void dispatcher_loop();
  void ticker_loop();

  ServiceConfig config_;
  std::unique_ptr<EventLog> log_;
  std::unique_ptr<Platform> platform_;
  mutable std::shared_mutex mu_;

  broker::Broker broker_;
  std::unique_ptr<broker::BrokerLoop> loop_;

  std::atomic<Minute> sim_now_{0};

  std::mutex bg_mu_;
  std::condition_variable bg_cv_;
  bool stopping_ = false;
  bool started_ = false;
  std::thread dispatcher_;
  std::thread ticker_;
  std::set<std::uint64_t> in_flight_;
  std::mutex dispatch_mu_;
};

}  // namespace shary::service
