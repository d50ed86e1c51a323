#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "shary/service/platform.hpp"

namespace shary::service {

/// CRC-32 (hex, 8 digits) of the compact dump of an event document without its "crc" member.
std::string event_crc(const json& event);

std::string encode_line(const Event& e);
/// Throws corrupt-log on bad JSON or a checksum mismatch.
Event decode_line(const std::string& line, std::size_t line_no);

/// Newline-delimited events with per-line checksums, plus periodic state snapshots, in one directory.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path dir);

  /// All events in order. Throws corrupt-log on a bad line or a seq gap.
  std::vector<Event> load() const;
  void append(const Event& e);

  void write_snapshot(std::uint64_t seq, const json& snapshot);
  /// The snapshot with the highest seq, if any.
  std::optional<json> latest_snapshot() const;

  const std::filesystem::path& path() const { return log_path_; }

 private:
  std::filesystem::path dir_;
  std::filesystem::path log_path_;
  std::ofstream out_;
  std::mutex mu_;
};

}  // namespace shary::service
