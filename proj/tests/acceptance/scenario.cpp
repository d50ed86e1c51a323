#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

#include "acceptance/checks.hpp"
#include "shary/error.hpp"
#include "shary/service/event_log.hpp"
#include "shary/service/platform.hpp"

namespace shary::acceptance {

namespace {

using service::Command;
using service::Platform;
using nlohmann::json;

constexpr int kUsers = 12;
constexpr int kUnits = 4;
constexpr Minute kWeek = 7 * kDay;

struct TraceRequest {
  Minute submit_at = 0;
  std::string user;
  int units = 1;
  Interval interval;
  bool releases = false;  // releases at the midpoint if it is running by then
};

Minute week_start() { return *parse_iso("2026-03-02T00:00Z"); }

// Roughly 1.6x oversubscribed: twelve users, two requests a day each, 1-8h, 1-2 units.
std::vector<TraceRequest> make_trace() {
  std::mt19937_64 rng(20260302);
  std::vector<TraceRequest> out;
  const Minute t0 = week_start();
  for (int day = 0; day < 7; ++day)
    for (int u = 0; u < kUsers; ++u)
      for (int k = 0; k < 2; ++k) {
        TraceRequest r;
        r.user = "user" + std::to_string(u + 1);
        Minute start = t0 + day * kDay + static_cast<Minute>(rng() % 96) * kGranularity;
        Minute length = static_cast<Minute>(4 + rng() % 29) * kGranularity;
        r.interval = {start, std::min(start + length, t0 + kWeek)};
        if (r.interval.empty()) r.interval.end = r.interval.start + kGranularity;
        r.units = rng() % 4 == 0 ? 2 : 1;
        Minute lead = static_cast<Minute>(rng() % 193) * kGranularity;  // up to two days ahead
        r.submit_at = std::max(t0, start - lead);
        out.push_back(r);
      }
  std::stable_sort(out.begin(), out.end(),
                   [](const TraceRequest& a, const TraceRequest& b) { return a.submit_at < b.submit_at; });
  // 30% release early, chosen independently of the order above.
  std::vector<std::size_t> idx(out.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < out.size() * 3 / 10; ++i) out[idx[i]].releases = true;
  return out;
}

const char* kPolicy = R"(policy "gpu-week" {
  applies to kind gpu;
  tier "staff" advance 30d priority 1;
  max_duration 8h;
  on_contention queue;
})";

void exec(Platform& p, std::string kind, json payload, std::string actor, Minute ts) {
  p.execute(Command{std::move(kind), std::move(payload), std::move(actor), ts, {}});
}

std::unique_ptr<Platform> setup(bool dynamic) {
  service::PlatformConfig config;
  config.scheduler.dynamic_reallocation = dynamic;
  auto p = std::make_unique<Platform>(config);
  const Minute t0 = week_start();
  exec(*p, "driver.register", {{"id", "sim"}}, "system", t0);
  for (int u = 1; u <= kUsers; ++u)
    exec(*p, "user.register", {{"user", "user" + std::to_string(u)}, {"tier", "staff"}}, "system", t0);
  exec(*p, "resource.register",
       {{"id", "gpu"}, {"kind", "gpu"}, {"site", "roma"}, {"units", kUnits}, {"driver", "sim"}}, "system", t0);
  exec(*p, "policy.install", {{"source", kPolicy}}, "system", t0);
  return p;
}

// Held unit-minutes inside the week over offered unit-minutes.
double utilization(const Platform& p) {
  using S = scheduler::ReservationState;
  const Interval week{week_start(), week_start() + kWeek};
  Minute held = 0;
  for (const auto& [id, r] : p.scheduler().reservations()) {
    if (r.state != S::completed && r.state != S::released && r.state != S::active && r.state != S::preempted)
      continue;
    held += static_cast<Minute>(r.units.size()) * r.interval.intersect(week).length();
  }
  return static_cast<double>(held) / static_cast<double>(kUnits * kWeek);
}

std::unique_ptr<Platform> run(const std::vector<TraceRequest>& trace, bool dynamic) {
  auto p = setup(dynamic);
  const Minute t0 = week_start();
  std::map<std::size_t, scheduler::ReservationId> booked;
  std::multimap<Minute, std::size_t> releases;
  std::size_t next = 0;
  for (Minute t = t0; t <= t0 + kWeek + kDay; t += kGranularity) {
    exec(*p, "tick", json::object(), "system", t);
    for (auto [it, end] = releases.equal_range(t); it != end; ++it) {
      auto id = booked.at(it->second);
      if (p->scheduler().get(id).state != scheduler::ReservationState::active) continue;
      exec(*p, "reservation.release", {{"id", id}}, trace[it->second].user, t);
    }
    for (; next < trace.size() && trace[next].submit_at <= t; ++next) {
      const TraceRequest& r = trace[next];
      auto out = p->execute(Command{"reservation.request",
                                    {{"resource", "gpu"},
                                     {"units", r.units},
                                     {"start", format_iso(r.interval.start)},
                                     {"end", format_iso(r.interval.end)}},
                                    r.user,
                                    t,
                                    {}});
      if (out.rejection) continue;
      booked[next] = out.document.at("id").get<scheduler::ReservationId>();
      if (r.releases) {
        Minute mid = align_up(r.interval.start + r.interval.length() / 2);
        if (mid > r.interval.start && mid < r.interval.end) releases.emplace(mid, next);
      }
    }
    // Every offer is taken up by its candidate while it is open.
    std::vector<std::pair<scheduler::OfferId, std::string>> open;
    for (const auto& [id, o] : p->scheduler().offers())
      if (o.state == scheduler::OfferState::open) open.emplace_back(id, o.candidate.user);
    for (const auto& [id, user] : open) {
      try {
        exec(*p, "offer.accept", {{"id", id}}, user, t);
      } catch (const Error&) {
        // taken by an earlier acceptance in this step
      }
    }
  }
  return p;
}

}  // namespace

SharingResult run_sharing_scenario() {
  SharingResult out;
  auto trace = make_trace();
  auto dyn = run(trace, true);
  auto stat = run(trace, false);
  out.dynamic_utilization = utilization(*dyn);
  out.static_utilization = utilization(*stat);

  // Replay from memory, from the on-disk log, and from a mid-run snapshot plus the tail.
  const std::string want = dyn->snapshot().dump();
  bool mem = Platform::replay(dyn->events(), dyn->config())->snapshot().dump() == want;

  auto dir = std::filesystem::temp_directory_path() / ("shary-acceptance-" + std::to_string(std::random_device{}()));
  bool disk = false, tail = false;
  {
    service::EventLog log(dir);
    for (const auto& e : dyn->events()) log.append(e);
  }
  {
    auto loaded = service::EventLog(dir).load();
    disk = Platform::replay(loaded, dyn->config())->snapshot().dump() == want;
    std::vector<service::Event> head(loaded.begin(), loaded.begin() + static_cast<std::ptrdiff_t>(loaded.size() / 2));
    json mid = Platform::replay(head, dyn->config())->snapshot();
    tail = Platform::replay(loaded, dyn->config(), &mid)->snapshot().dump() == want;
  }
  std::filesystem::remove_all(dir);
  out.replay_identical = mem && disk && tail;
  out.replay_detail = std::to_string(dyn->events().size()) + " events; memory " + (mem ? "ok" : "differs") +
                      ", log file " + (disk ? "ok" : "differs") + ", snapshot+tail " + (tail ? "ok" : "differs");
  return out;
}

}  // namespace shary::acceptance
