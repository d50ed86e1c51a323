#include "shary/service/event_log.hpp"

#include <zlib.h>

#include <cstdio>

#include "shary/error.hpp"

namespace shary::service {

namespace fs = std::filesystem;

std::string event_crc(const json& event) {
  json copy = event;
  copy.erase("crc");
  std::string text = copy.dump();
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

std::string encode_line(const Event& e) {
  json j = to_json(e);
  j["crc"] = event_crc(j);
  return j.dump();
}

Event decode_line(const std::string& line, std::size_t line_no) {
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::corrupt_log, "event log line " + std::to_string(line_no) + ": " + why);
  };
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
  if (!j.contains("crc") || !j["crc"].is_string()) throw fail("missing checksum");
  if (j["crc"].get<std::string>() != event_crc(j)) throw fail("checksum mismatch");
  try {
    return event_from_json(j);
  } catch (const std::exception& e) {
    throw fail(e.what());
  }
}

EventLog::EventLog(fs::path dir) : dir_(std::move(dir)), log_path_(dir_ / "events.ndjson") {
  fs::create_directories(dir_ / "snapshots");
  out_.open(log_path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(ErrorCode::invalid_request, "cannot open event log " + log_path_.string());
}

std::vector<Event> EventLog::load() const {
  std::vector<Event> out;
  std::ifstream in(log_path_, std::ios::binary);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Event e = decode_line(line, n);
    std::uint64_t want = out.empty() ? 1 : out.back().seq + 1;
    if (e.seq != want)
      throw Error(ErrorCode::corrupt_log, "event log line " + std::to_string(n) + ": expected seq " +
                                              std::to_string(want) + ", found " + std::to_string(e.seq));
    out.push_back(std::move(e));
  }
  return out;
}

void EventLog::append(const Event& e) {
  std::string line = encode_line(e) + '\n';
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
}

void EventLog::write_snapshot(std::uint64_t seq, const json& snapshot) {
  char name[40];
  std::snprintf(name, sizeof name, "snapshot-%012llu.json", static_cast<unsigned long long>(seq));
  fs::path final_path = dir_ / "snapshots" / name;
  fs::path tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << snapshot.dump();
  }
  fs::rename(tmp, final_path);
}

std::optional<json> EventLog::latest_snapshot() const {
  fs::path best;
  for (const auto& entry : fs::directory_iterator(dir_ / "snapshots")) {
    const auto name = entry.path().filename().string();
    if (name.rfind("snapshot-", 0) == 0 && entry.path().extension() == ".json" && name > best.filename().string())
      best = entry.path();
  }
  if (best.empty()) return std::nullopt;
  std::ifstream in(best, std::ios::binary);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::corrupt_log, "unreadable snapshot " + best.string());
  return j;
}

}  // namespace shary::service
