#include "shary/service/service.hpp"

#include <fstream>

#include "shary/error.hpp"
#include "shary/service/state_json.hpp"

namespace shary::service {

namespace fs = std::filesystem;

namespace {

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_request, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::invalid_request, path.string() + " is not valid JSON");
  return j;
}

std::string load_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_request, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// A string value names a file holding the document; anything else is the document itself.
json inline_or_file(const json& v, const fs::path& base) {
  if (v.is_string()) return load_json_file(base / v.get<std::string>());
  return v;
}

class FailingTransport final : public Transport {
 public:
  bool deliver(const Notification&, const UserRecord&, std::string& error) override {
    error = "no transport configured";
    return false;
  }
};

Minute wall_minutes() {
  using namespace std::chrono;
  return duration_cast<minutes>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

ServiceConfig service_config_from_json(const json& doc, const fs::path& base) {
  ServiceConfig c;
  if (doc.contains("data_dir")) {
    fs::path d = doc["data_dir"].get<std::string>();
    c.data_dir = d.is_absolute() ? d : base / d;
  }
  if (doc.contains("scheduler")) c.platform.scheduler = scheduler_config_from_json(doc["scheduler"]);
  c.platform.snapshot_every = doc.value("snapshot_every", c.platform.snapshot_every);
  c.sim_clock = doc.value("sim_clock", true);
  if (doc.contains("start_time")) c.start_time = time_from_json(doc["start_time"], "start_time");
  c.broker_tick = std::chrono::milliseconds(1000 * doc.value("broker_tick_seconds", 60));
  for (const auto& t : doc.value("tokens", json::array())) {
    if (!t.contains("token") || !t["token"].is_string())
      throw Error(ErrorCode::invalid_request, "token entries need a 'token'");
    c.tokens.push_back({t["token"].get<std::string>(), user_from_json(t)});
  }
  if (doc.contains("drivers")) c.drivers = broker::parse_driver_registry(inline_or_file(doc["drivers"], base));
  if (doc.contains("seed")) c.seed = catalog::descriptors_from_json(inline_or_file(doc["seed"], base));
  for (const auto& p : doc.value("policies", json::array())) {
    if (p.is_string())
      c.policies.push_back(load_text_file(base / p.get<std::string>()));
    else
      c.policies.push_back(p.at("source").get<std::string>());
  }
  if (doc.contains("email_outbox")) {
    fs::path o = doc["email_outbox"].get<std::string>();
    c.email = std::make_shared<EmailStubTransport>((o.is_absolute() ? o : base / o).string());
  }
  return c;
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.email) config_.email = std::make_shared<EmailStubTransport>();
  if (!config_.webhook) config_.webhook = std::make_shared<FailingTransport>();

  if (!config_.data_dir.empty()) {
    log_ = std::make_unique<EventLog>(config_.data_dir);
    std::vector<Event> events = log_->load();
    std::optional<json> snap = log_->latest_snapshot();
    if (snap && snap->value("seq", std::uint64_t{0}) > (events.empty() ? 0 : events.back().seq)) snap.reset();
    platform_ = Platform::replay(events, config_.platform, snap ? &*snap : nullptr);
  } else {
    platform_ = std::make_unique<Platform>(config_.platform);
  }
  platform_->set_event_sink([this](const Event& e) { on_event(e); });
  sim_now_ = std::max(config_.start_time, platform_->clock());

  for (const auto& d : config_.drivers) {
    auto driver = broker::make_driver(d);
    if (!config_.data_dir.empty()) {
      fs::path state = config_.data_dir / "drivers" / (d.id + ".json");
      if (fs::exists(state)) driver->load_state(load_json_file(state));
    }
    broker_.add_driver(std::move(driver));
  }
  bootstrap();
}

Service::~Service() {
  stop();
  if (!config_.data_dir.empty()) {
    fs::create_directories(config_.data_dir / "drivers");
    for (const auto& id : broker_.driver_ids()) {
      std::ofstream out(config_.data_dir / "drivers" / (id + ".json"));
      out << broker_.get(id).state_document().dump(2) << '\n';
    }
  }
}

void Service::bootstrap() {
  for (const auto& d : config_.drivers) submit({"driver.register", {{"id", d.id}}});
  for (const auto& t : config_.tokens) {
    bool known = read([&](const Platform& p) { return p.find_user(t.user.name) != nullptr; });
    if (!known) submit({"user.register", to_json(t.user)});
  }
  for (const auto& d : config_.seed) {
    bool known = read([&](const Platform& p) { return p.catalog().find(d.id) != nullptr; });
    if (!known) submit({"resource.register", catalog::descriptor_to_json(d)});
  }
  for (const auto& src : config_.policies) {
    auto parsed = policy::parse_policy(src);
    if (!parsed.ok())
      throw Error(ErrorCode::parse_error, "configured policy: " + policy::to_string(parsed.diagnostics.front()));
    bool same = read([&](const Platform& p) {
      const policy::Policy* have = p.policies().find(parsed.policy->name);
      return have && *have == *parsed.policy;
    });
    if (!same) submit({"policy.install", {{"source", src}}});
  }
}

void Service::on_event(const Event& e) {
  if (!log_) return;
  log_->append(e);
  if (config_.platform.snapshot_every && e.seq % config_.platform.snapshot_every == 0)
    log_->write_snapshot(e.seq, platform_->snapshot());
}

std::optional<Principal> Service::authenticate(const std::string& bearer) const {
  for (const auto& t : config_.tokens)
    if (t.token == bearer) return Principal{t.user.name, t.user.admin};
  return std::nullopt;
}

Minute Service::now() const { return config_.sim_clock ? sim_now_.load() : wall_minutes(); }

CommandResult Service::submit(Command cmd) {
  CommandResult r;
  {
    std::unique_lock lock(mu_);
    cmd.ts = now();
    r = platform_->execute(cmd);
  }
  if (r.seq) {
    if (loop_) loop_->poke(r.seq);
    if (config_.sim_clock && !loop_) reconcile_now();
    bg_cv_.notify_all();
  }
  return r;
}

void Service::set_clock(Minute t) {
  if (!config_.sim_clock) throw Error(ErrorCode::invalid_request, "the service runs on the wall clock");
  if (t < sim_now_) throw Error(ErrorCode::invalid_request, "the clock cannot move backwards");
  sim_now_ = t;
  submit({"tick"});
  reconcile_now();
}

broker::StoreView Service::store_view() const {
  std::shared_lock lock(mu_);
  broker::StoreView v;
  v.seq = platform_->seq();
  v.now = now();
  v.reservations = platform_->scheduler().reservations();
  v.resources = platform_->catalog().list(catalog::ResourceFilter{std::nullopt, std::nullopt, std::nullopt, true});
  for (const auto& [name, u] : platform_->users()) v.users.insert(name);
  return v;
}

std::vector<broker::PassReport> Service::reconcile_now() { return broker_.reconcile_all(store_view()); }

broker::ExecResult Service::exec_driver(const std::string& driver, const Principal& who,
                                        std::vector<std::string> args) {
  return broker_.get(driver).execute({who.user, who.admin, std::move(args)});
}

std::size_t Service::dispatch_notifications() {
  std::lock_guard guard(dispatch_mu_);
  auto pending = read([](const Platform& p) { return p.notifications().pending(); });
  std::size_t n = 0;
  for (const Notification& note : pending) {
    if (in_flight_.count(note.id)) continue;
    auto user = read([&](const Platform& p) {
      const UserRecord* u = p.find_user(note.user);
      return u ? *u : UserRecord{note.user};
    });
    in_flight_.insert(note.id);
    Transport& t = note.channel == Channel::webhook ? *config_.webhook : *config_.email;
    DeliveryOutcome out = dispatch(note, user, t);
    submit({"notification.delivery",
            {{"id", out.id}, {"delivered", out.delivered}, {"attempts", out.attempts}, {"error", out.error}}});
    in_flight_.erase(note.id);
    ++n;
  }
  return n;
}

void Service::start() {
  if (started_) return;
  started_ = true;
  stopping_ = false;
  if (!config_.background) return;
  loop_ = std::make_unique<broker::BrokerLoop>(broker_, [this] { return store_view(); }, config_.broker_tick);
  loop_->start();
  dispatcher_ = std::thread([this] { dispatcher_loop(); });
  if (!config_.sim_clock) ticker_ = std::thread([this] { ticker_loop(); });
}

void Service::stop() {
  {
    std::lock_guard lock(bg_mu_);
    stopping_ = true;
  }
  bg_cv_.notify_all();
  if (loop_) {
    loop_->stop();
    loop_.reset();
  }
  if (dispatcher_.joinable()) dispatcher_.join();
  if (ticker_.joinable()) ticker_.join();
  started_ = false;
}

void Service::dispatcher_loop() {
  std::unique_lock lock(bg_mu_);
  while (!stopping_) {
    lock.unlock();
    dispatch_notifications();
    lock.lock();
    bg_cv_.wait_for(lock, std::chrono::seconds(1));
  }
}

void Service::ticker_loop() {
  Minute last = 0;
  std::unique_lock lock(bg_mu_);
  while (!stopping_) {
    Minute t = now();
    if (t != last) {
      lock.unlock();
      submit({"tick"});
      lock.lock();
      last = t;
    }
    bg_cv_.wait_for(lock, std::chrono::seconds(5));
  }
}

}  // namespace shary::service
