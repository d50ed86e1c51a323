#include "shary/broker/broker.hpp"

#include "shary/error.hpp"

namespace shary::broker {

void Broker::add_driver(std::unique_ptr<Driver> driver) {
  std::string id = driver->id();
  if (slots_.count(id)) throw Error(ErrorCode::duplicate_id, "driver '" + id + "' already registered");
  auto slot = std::make_unique<Slot>();
  slot->driver = std::move(driver);
  slots_.emplace(id, std::move(slot));
}

Driver* Broker::find(const std::string& id) {
  auto it = slots_.find(id);
  return it == slots_.end() ? nullptr : it->second->driver.get();
}

const Driver* Broker::find(const std::string& id) const {
  auto it = slots_.find(id);
  return it == slots_.end() ? nullptr : it->second->driver.get();
}

Driver& Broker::get(const std::string& id) {
  Driver* d = find(id);
  if (!d) throw Error(ErrorCode::unknown_driver, "unknown driver '" + id + "'");
  return *d;
}

std::vector<std::string> Broker::driver_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, s] : slots_) out.push_back(id);
  return out;
}

const Reconciler& Broker::reconciler(const std::string& driver) const {
  auto it = slots_.find(driver);
  if (it == slots_.end()) throw Error(ErrorCode::unknown_driver, "unknown driver '" + driver + "'");
  return it->second->reconciler;
}

GrantSet Broker::desired_for(const std::string& driver, const StoreView& view) {
  std::set<std::string> mine;
  for (const auto& d : view.resources)
    if (d.driver == driver) mine.insert(d.id);
  GrantSet out;
  for (const AccessGrant& g : desired_state(view.now, view.reservations))
    if (mine.count(g.resource)) out.insert(g);
  return out;
}

PassReport Broker::reconcile(const std::string& driver, const StoreView& view) {
  auto it = slots_.find(driver);
  if (it == slots_.end()) throw Error(ErrorCode::unknown_driver, "unknown driver '" + driver + "'");
  Slot& slot = *it->second;
  std::lock_guard lock(slot.mu);
  PassReport report{driver, view.now, {}, true, {}};

  std::map<std::string, int> bound;
  for (const auto& d : view.resources)
    if (d.driver == driver) bound[d.id] = d.units;
  slot.driver->bind(bound);
  slot.driver->set_users(view.users);

  GrantSet desired = desired_for(driver, view);
  DriverSnapshot observed;
  try {
    observed = slot.driver->snapshot();
    for (const DriverAction& a : slot.reconciler.plan(desired, observed, view.now)) {
      slot.driver->apply(a);
      report.actions.push_back(a);
    }
  } catch (const Error& e) {
    report.ok = false;
    report.error = e.what();
  }
  if (report.ok || !report.actions.empty()) {
    DriverSnapshot after = observed;
    try {
      after = slot.driver->snapshot();
    } catch (const Error&) {
    }
    slot.reconciler.commit(desired, after, report.actions, view.now);
  }
  return report;
}

std::vector<PassReport> Broker::reconcile_all(const StoreView& view) {
  std::vector<PassReport> out;
  for (const auto& [id, slot] : slots_) out.push_back(reconcile(id, view));
  return out;
}

BrokerLoop::BrokerLoop(Broker& broker, ViewSource source, std::chrono::milliseconds tick, Observer observer)
    : broker_(broker), source_(std::move(source)), tick_(tick), observer_(std::move(observer)) {}

BrokerLoop::~BrokerLoop() { stop(); }

void BrokerLoop::start() {
  {
    std::lock_guard lock(mu_);
    stopping_ = false;
  }
  for (const std::string& id : broker_.driver_ids()) threads_.emplace_back([this, id] { worker(id); });
}

void BrokerLoop::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  threads_.clear();
}

void BrokerLoop::poke(std::uint64_t seq) {
  {
    std::lock_guard lock(mu_);
    if (seq > seq_) seq_ = seq;
  }
  cv_.notify_all();
}

void BrokerLoop::worker(const std::string& driver) {
  std::uint64_t seen = 0;
  std::unique_lock lock(mu_);
  while (!stopping_) {
    lock.unlock();
    StoreView view = source_();
    PassReport report = broker_.reconcile(driver, view);
    if (observer_ && (!report.actions.empty() || !report.ok)) observer_(report);
    seen = view.seq;
    lock.lock();
    cv_.wait_for(lock, tick_, [&] { return stopping_ || seq_ > seen; });
  }
}

}  // namespace shary::broker
