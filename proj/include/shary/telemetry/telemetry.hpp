#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shary/catalog/catalog.hpp"
#include "shary/time.hpp"

namespace shary::telemetry {

struct UtilizationSample {
  std::string resource;
  int unit = 0;
  Minute ts = 0;
  double utilization = 0.0;  // percent, [0, 100]
  double power_watts = 0.0;

  bool operator==(const UtilizationSample&) const = default;
};

enum class Activity { idle, dev, batch };
std::string_view to_string(Activity a);

inline constexpr double kIdleMaxUtilization = 5.0;   // idle iff max < 5
inline constexpr double kBatchMeanUtilization = 60.0;  // batch iff mean > 60
inline constexpr Minute kClassificationWindow = 15;

/// Minute counts here are unit-minutes: a two-unit reservation held for an hour covers 120.
struct UsageReport {
  std::string subject;
  Interval window;
  std::int64_t covered_minutes = 0;
  std::int64_t busy_minutes = 0;
  std::int64_t idle_minutes = 0;
  std::int64_t dev_minutes = 0;
  std::int64_t batch_minutes = 0;
  double unit_hours = 0.0;
  double energy_kwh = 0.0;

  UsageReport& operator+=(const UsageReport& o);
};

/// One stretch of held capacity: the units a reservation occupied over `span`.
struct HeldSpan {
  std::string resource;
  std::vector<int> units;
  Interval span;
};

struct SpanUsage {
  std::int64_t idle = 0;
  std::int64_t dev = 0;
  std::int64_t batch = 0;
  double watt_minutes = 0.0;

  std::int64_t busy() const { return dev + batch; }
};

class Telemetry {
 public:
  struct Point {
    Minute ts = 0;
    double utilization = 0.0;
    double power_watts = 0.0;

    bool operator==(const Point&) const = default;
  };
  using Stream = std::vector<Point>;

  /// Throws out-of-range-utilization, out-of-order-timestamp, invalid-sample.
  void ingest(const UtilizationSample& sample);

  /// idle if max < 5%, batch if mean > 60%, dev otherwise. Minutes without samples read as 0%.
  /// Throws window-too-short below 15 minutes.
  Activity classify_window(const std::string& resource, int unit, Interval window) const;

  /// Per-minute attribution over `span`: each minute inherits the class of its aligned 15-minute block.
  SpanUsage measure(const std::string& resource, int unit, Interval span) const;

  /// Length of the longest run of idle 15-minute windows ending at `now`, not reaching before `since`.
  Minute idle_streak(const std::string& resource, int unit, Minute now, Minute since) const;

  const std::map<catalog::ResourceUnit, Stream>& streams() const { return streams_; }
  std::size_t sample_count() const;

  bool operator==(const Telemetry&) const = default;

 private:
  struct MinuteStats {
    double max_util = 0.0;
    double sum_util = 0.0;
    double sum_watts = 0.0;
  };
  const Stream* find(const std::string& resource, int unit) const;
  MinuteStats stats(const Stream& s, Interval window) const;

  std::map<catalog::ResourceUnit, Stream> streams_;
};

/// Aggregates held spans intersected with `window`, counting only minutes before `now`.
UsageReport usage_report(const Telemetry& telemetry, std::string subject, std::span<const HeldSpan> spans,
                         Interval window, Minute now);

}  // namespace shary::telemetry
