#include "shary/service/notifications.hpp"

#include <fstream>

#include "shary/error.hpp"

namespace shary::service {

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::log: return "log";
    case Channel::webhook: return "webhook";
    case Channel::email_stub: return "email-stub";
  }
  return "?";
}

std::optional<Channel> parse_channel(std::string_view text) {
  for (auto c : {Channel::log, Channel::webhook, Channel::email_stub})
    if (to_string(c) == text) return c;
  return std::nullopt;
}

Notification& NotificationCenter::add(const std::string& user, Channel channel, scheduler::NoticeKind kind,
                                      std::string subject, std::string body, Minute now) {
  Notification n;
  n.id = next_id_++;
  n.user = user;
  n.channel = channel;
  n.kind = kind;
  n.subject = std::move(subject);
  n.body = std::move(body);
  n.created_at = now;
  if (channel == Channel::log) {
    n.delivered = true;
    n.attempts = 1;
  }
  return notifications_[n.id] = std::move(n);
}

void NotificationCenter::notify(const scheduler::Notice& notice, Minute now) {
  auto it = users_.find(notice.user);
  // Scheduler notices always name registered users; anything else still lands in the log.
  Channel channel = it == users_.end() ? Channel::log : it->second.channel;
  add(notice.user, channel, notice.kind, notice.subject, notice.body, now);
}

const Notification& NotificationCenter::record(const std::string& user, scheduler::NoticeKind kind,
                                               std::string subject, std::string body, Minute now) {
  auto it = users_.find(user);
  if (it == users_.end()) throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
  return add(user, it->second.channel, kind, std::move(subject), std::move(body), now);
}

void NotificationCenter::mark_delivery(std::uint64_t id, bool delivered, int attempts, std::string error) {
  auto it = notifications_.find(id);
  if (it == notifications_.end()) throw Error(ErrorCode::unknown_id, "unknown notification " + std::to_string(id));
  it->second.delivered = delivered;
  it->second.attempts = attempts;
  it->second.error = std::move(error);
}

std::vector<Notification> NotificationCenter::pending() const {
  std::vector<Notification> out;
  for (const auto& [id, n] : notifications_)
    if (n.pending()) out.push_back(n);
  return out;
}

std::vector<Notification> NotificationCenter::for_user(const std::string& user) const {
  std::vector<Notification> out;
  for (const auto& [id, n] : notifications_)
    if (n.user == user) out.push_back(n);
  return out;
}

void NotificationCenter::restore(State s) {
  notifications_ = std::move(s.notifications);
  next_id_ = s.next_id;
}

bool EmailStubTransport::deliver(const Notification& n, const UserRecord& user, std::string& error) {
  std::string line = "to=" + user.name + " subject=" + n.subject + " body=" + n.body;
  if (!outbox_.empty()) {
    std::ofstream out(outbox_, std::ios::app);
    if (!out) {
      error = "cannot open outbox " + outbox_;
      return false;
    }
    out << line << '\n';
  }
  sent_.push_back(std::move(line));
  return true;
}

DeliveryOutcome dispatch(const Notification& n, const UserRecord& user, Transport& transport, int max_attempts) {
  DeliveryOutcome out{n.id, false, 0, {}};
  while (out.attempts < max_attempts) {
    ++out.attempts;
    std::string error;
    if (transport.deliver(n, user, error)) {
      out.delivered = true;
      out.error.clear();
      return out;
    }
    out.error = error;
  }
  return out;
}

}  // namespace shary::service
