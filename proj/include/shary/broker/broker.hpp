#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "shary/broker/driver.hpp"
#include "shary/broker/reconciler.hpp"
#include "shary/catalog/catalog.hpp"

namespace shary::broker {

/// What a reconciliation pass reads from the reservation store: a consistent copy tagged with its event seq.
struct StoreView {
  std::uint64_t seq = 0;
  Minute now = 0;
  std::map<scheduler::ReservationId, scheduler::Reservation> reservations;
  std::vector<catalog::ResourceDescriptor> resources;
  std::set<std::string> users;
};

struct PassReport {
  std::string driver;
  Minute now = 0;
  std::vector<DriverAction> actions;  // applied
  bool ok = true;
  std::string error;
};

/// Owns the drivers and one reconciler per driver.
class Broker {
 public:
  void add_driver(std::unique_ptr<Driver> driver);
  Driver* find(const std::string& id);
  const Driver* find(const std::string& id) const;
  Driver& get(const std::string& id);
  std::vector<std::string> driver_ids() const;

  /// Grants a driver is responsible for, given the store view.
  static GrantSet desired_for(const std::string& driver, const StoreView& view);

  /// One reconcile pass: bind resources and users, snapshot, plan, apply, commit. A driver failure is reported,
  /// not thrown; unapplied actions are simply re-planned next pass.
  PassReport reconcile(const std::string& driver, const StoreView& view);
  std::vector<PassReport> reconcile_all(const StoreView& view);

  const Reconciler& reconciler(const std::string& driver) const;

 private:
  struct Slot {
    std::unique_ptr<Driver> driver;
    Reconciler reconciler;
    std::mutex mu;  // one pass at a time per driver
  };
  std::map<std::string, std::unique_ptr<Slot>> slots_;
};

/// Background reconciliation: one worker per driver, woken by a new event seq or by the tick interval.
class BrokerLoop {
 public:
  using ViewSource = std::function<StoreView()>;
  using Observer = std::function<void(const PassReport&)>;

  BrokerLoop(Broker& broker, ViewSource source, std::chrono::milliseconds tick, Observer observer = {});
  ~BrokerLoop();

  void start();
  void stop();
  /// Signals that the event seq advanced.
  void poke(std::uint64_t seq);

 private:
  void worker(const std::string& driver);

  Broker& broker_;
  ViewSource source_;
  std::chrono::milliseconds tick_;
  Observer observer_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t seq_ = 0;
  bool stopping_ = false;
};

}  // namespace shary::broker
