#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shary/service/api.hpp"

namespace shary::service {

/// Where the CLI sends its /v1 calls.
class ApiClient {
 public:
  virtual ~ApiClient() = default;
  virtual ApiResponse send(const std::string& method, const std::string& path,
                           const std::map<std::string, std::string>& query, const std::optional<json>& body,
                           const std::string& idempotency_key) = 0;
};

class HttpApiClient final : public ApiClient {
 public:
  HttpApiClient(std::string url, std::string token) : url_(std::move(url)), token_(std::move(token)) {}
  ApiResponse send(const std::string& method, const std::string& path, const std::map<std::string, std::string>& query,
                   const std::optional<json>& body, const std::string& idempotency_key) override;

 private:
  std::string url_;
  std::string token_;
};

/// Calls the router directly; used by tests and golden runs.
class InProcessClient final : public ApiClient {
 public:
  InProcessClient(Service& service, std::string token) : service_(service), token_(std::move(token)) {}
  ApiResponse send(const std::string& method, const std::string& path, const std::map<std::string, std::string>& query,
                   const std::optional<json>& body, const std::string& idempotency_key) override;
  void set_token(std::string token) { token_ = std::move(token); }

 private:
  Service& service_;
  std::string token_;
};

/// Runs one CLI invocation (args exclude the program name). `client` may be null, in which case an
/// HttpApiClient is built from --url/--token or SHARY_URL/SHARY_TOKEN. Returns the exit code.
int run_cli(const std::vector<std::string>& args, ApiClient* client, std::ostream& out, std::ostream& err);

/// `shary serve`: runs the API until SIGINT/SIGTERM.
int serve(const std::string& config_path, const std::string& data_dir, const std::string& host, int port,
          std::ostream& out, std::ostream& err);

}  // namespace shary::service
