#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shary/scheduler/scheduler.hpp"

namespace shary::service {

enum class Channel { log, webhook, email_stub };
std::string_view to_string(Channel c);
std::optional<Channel> parse_channel(std::string_view text);

struct UserRecord {
  std::string name;
  std::string tier;
  bool admin = false;
  Channel channel = Channel::log;
  std::string webhook;  // target URL for Channel::webhook

  bool operator==(const UserRecord&) const = default;
};

inline constexpr int kMaxDeliveryAttempts = 3;

struct Notification {
  std::uint64_t id = 0;
  std::string user;
  Channel channel = Channel::log;
  scheduler::NoticeKind kind = scheduler::NoticeKind::confirmation;
  std::string subject;
  std::string body;
  Minute created_at = 0;
  bool delivered = false;
  int attempts = 0;
  std::string error;

  /// Waiting for the out-of-band dispatcher.
  bool pending() const { return !delivered && attempts == 0 && channel != Channel::log; }
  bool operator==(const Notification&) const = default;
};

/// Records every notice raised by the platform. Log-channel notices are delivered on the spot; webhook and
/// email-stub notices wait for the dispatcher, whose outcome comes back through `mark_delivery`.
class NotificationCenter final : public scheduler::Notifier {
 public:
  explicit NotificationCenter(const std::map<std::string, UserRecord>& users) : users_(users) {}

  void notify(const scheduler::Notice& notice, Minute now) override;

  /// Throws unknown-user.
  const Notification& record(const std::string& user, scheduler::NoticeKind kind, std::string subject,
                             std::string body, Minute now);
  /// Throws unknown-id.
  void mark_delivery(std::uint64_t id, bool delivered, int attempts, std::string error);

  const std::map<std::uint64_t, Notification>& all() const { return notifications_; }
  std::vector<Notification> pending() const;
  std::vector<Notification> for_user(const std::string& user) const;

  struct State {
    std::map<std::uint64_t, Notification> notifications;
    std::uint64_t next_id = 1;
  };
  State state() const { return {notifications_, next_id_}; }
  void restore(State s);

 private:
  Notification& add(const std::string& user, Channel channel, scheduler::NoticeKind kind, std::string subject,
                    std::string body, Minute now);

  const std::map<std::string, UserRecord>& users_;
  std::map<std::uint64_t, Notification> notifications_;
  std::uint64_t next_id_ = 1;
};

/// Delivers one notification over its channel; returns false with `error` set on failure.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual bool deliver(const Notification& n, const UserRecord& user, std::string& error) = 0;
};

/// Appends one line per message to an outbox file (or keeps them in memory when no path is given).
class EmailStubTransport final : public Transport {
 public:
  explicit EmailStubTransport(std::string outbox = {}) : outbox_(std::move(outbox)) {}
  bool deliver(const Notification& n, const UserRecord& user, std::string& error) override;
  const std::vector<std::string>& sent() const { return sent_; }

 private:
  std::string outbox_;
  std::vector<std::string> sent_;
};

struct DeliveryOutcome {
  std::uint64_t id = 0;
  bool delivered = false;
  int attempts = 0;
  std::string error;
};

/// Tries up to `max_attempts` times, stopping at the first success.
DeliveryOutcome dispatch(const Notification& n, const UserRecord& user, Transport& transport,
                         int max_attempts = kMaxDeliveryAttempts);

}  // namespace shary::service
