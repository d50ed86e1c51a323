#include "shary/telemetry/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include "shary/error.hpp"

namespace shary::telemetry {

std::string_view to_string(Activity a) {
  switch (a) {
    case Activity::idle: return "idle";
    case Activity::dev: return "dev";
    case Activity::batch: return "batch";
  }
  return "idle";
}

UsageReport& UsageReport::operator+=(const UsageReport& o) {
  covered_minutes += o.covered_minutes;
  busy_minutes += o.busy_minutes;
  idle_minutes += o.idle_minutes;
  dev_minutes += o.dev_minutes;
  batch_minutes += o.batch_minutes;
  unit_hours += o.unit_hours;
  energy_kwh += o.energy_kwh;
  return *this;
}

void Telemetry::ingest(const UtilizationSample& s) {
  if (s.resource.empty() || s.unit < 0) throw Error(ErrorCode::invalid_sample, "sample needs a resource and unit");
  if (!std::isfinite(s.utilization) || s.utilization < 0.0 || s.utilization > 100.0)
    throw Error(ErrorCode::out_of_range_utilization, "utilization must be within [0, 100]");
  if (!std::isfinite(s.power_watts) || s.power_watts < 0.0)
    throw Error(ErrorCode::invalid_sample, "power_watts must be a non-negative number");
  auto& stream = streams_[{s.resource, s.unit}];
  if (!stream.empty() && s.ts < stream.back().ts)
    throw Error(ErrorCode::out_of_order_timestamp, "sample at " + format_iso(s.ts) + " precedes last sample at " +
                                                       format_iso(stream.back().ts));
  stream.push_back({s.ts, s.utilization, s.power_watts});
}

std::size_t Telemetry::sample_count() const {
  std::size_t n = 0;
  for (const auto& [key, s] : streams_) n += s.size();
  return n;
}

const Telemetry::Stream* Telemetry::find(const std::string& resource, int unit) const {
  auto it = streams_.find({resource, unit});
  return it == streams_.end() ? nullptr : &it->second;
}

Telemetry::MinuteStats Telemetry::stats(const Stream& s, Interval window) const {
  MinuteStats out;
  auto it = std::lower_bound(s.begin(), s.end(), window.start, [](const Point& p, Minute t) { return p.ts < t; });
  while (it != s.end() && it->ts < window.end) {
    // Several samples in one minute are averaged into a single reading.
    const Minute ts = it->ts;
    double util = 0.0, watts = 0.0;
    int n = 0;
    for (; it != s.end() && it->ts == ts; ++it, ++n) {
      util += it->utilization;
      watts += it->power_watts;
    }
    util /= n;
    watts /= n;
    out.max_util = std::max(out.max_util, util);
    out.sum_util += util;
    out.sum_watts += watts;
  }
  return out;
}

namespace {

Activity classify(double max_util, double sum_util, Minute minutes) {
  if (max_util < kIdleMaxUtilization) return Activity::idle;
  if (sum_util > kBatchMeanUtilization * static_cast<double>(minutes)) return Activity::batch;
  return Activity::dev;
}

}  // namespace

Activity Telemetry::classify_window(const std::string& resource, int unit, Interval window) const {
  if (window.length() < kClassificationWindow)
    throw Error(ErrorCode::window_too_short, "classification window must span at least 15 minutes");
  const Stream* s = find(resource, unit);
  if (!s) return Activity::idle;
  const auto st = stats(*s, window);
  return classify(st.max_util, st.sum_util, window.length());
}

SpanUsage Telemetry::measure(const std::string& resource, int unit, Interval span) const {
  SpanUsage out;
  if (span.empty()) return out;
  const Stream* s = find(resource, unit);
  if (!s) {
    out.idle = span.length();
    return out;
  }
  for (Minute block = align_down(span.start); block < span.end; block += kClassificationWindow) {
    const Interval whole{block, block + kClassificationWindow};
    const Interval part = whole.intersect(span);
    const auto block_stats = stats(*s, whole);
    const Minute minutes = part.length();
    switch (classify(block_stats.max_util, block_stats.sum_util, kClassificationWindow)) {
      case Activity::idle: out.idle += minutes; break;
      case Activity::dev: out.dev += minutes; break;
      case Activity::batch: out.batch += minutes; break;
    }
    out.watt_minutes += part == whole ? block_stats.sum_watts : stats(*s, part).sum_watts;
  }
  return out;
}

Minute Telemetry::idle_streak(const std::string& resource, int unit, Minute now, Minute since) const {
  Minute streak = 0;
  const Stream* s = find(resource, unit);
  for (Minute end = now; end - kClassificationWindow >= since; end -= kClassificationWindow) {
    const Interval w{end - kClassificationWindow, end};
    if (s) {
      const auto st = stats(*s, w);
      if (classify(st.max_util, st.sum_util, kClassificationWindow) != Activity::idle) break;
    }
    streak += kClassificationWindow;
  }
  return streak;
}

UsageReport usage_report(const Telemetry& telemetry, std::string subject, std::span<const HeldSpan> spans,
                         Interval window, Minute now) {
  UsageReport r;
  r.subject = std::move(subject);
  r.window = window;
  double watt_minutes = 0.0;
  const Interval elapsed{window.start, std::min(window.end, now)};
  for (const auto& held : spans) {
    const Interval part = held.span.intersect(elapsed);
    if (part.empty()) continue;
    for (int unit : held.units) {
      const auto u = telemetry.measure(held.resource, unit, part);
      r.covered_minutes += part.length();
      r.idle_minutes += u.idle;
      r.dev_minutes += u.dev;
      r.batch_minutes += u.batch;
      watt_minutes += u.watt_minutes;
    }
  }
  r.busy_minutes = r.dev_minutes + r.batch_minutes;
  r.unit_hours = static_cast<double>(r.covered_minutes) / 60.0;
  r.energy_kwh = watt_minutes / 60.0 / 1000.0;
  return r;
}

}  // namespace shary::telemetry
