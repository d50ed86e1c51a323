#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "shary/error.hpp"
#include "shary/service/service.hpp"

namespace httplib {
class Server;
}

namespace shary::service {

/// Transport-neutral view of one HTTP request.
struct ApiRequest {
  std::string method;
  std::string path;  // without query string
  std::map<std::string, std::string> query;
  std::string bearer;
  std::string idempotency_key;
  std::string content_type;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  json body = json::object();
  std::map<std::string, std::string> headers;
};

int http_status(ErrorCode code);
json error_document(ErrorCode code, const std::string& message);

/// Routes one /v1 request against the service. Never throws.
ApiResponse handle_request(Service& service, const ApiRequest& request);

/// POSTs the notification document to the user's webhook URL.
class WebhookTransport final : public Transport {
 public:
  explicit WebhookTransport(int timeout_seconds = 5) : timeout_seconds_(timeout_seconds) {}
  bool deliver(const Notification& n, const UserRecord& user, std::string& error) override;

 private:
  int timeout_seconds_;
};

class ApiServer {
 public:
  explicit ApiServer(Service& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// port 0 picks a free port. Throws bind-failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  /// Runs listen() on a background thread.
  void start();
  void stop();
  int port() const { return port_; }

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace shary::service
