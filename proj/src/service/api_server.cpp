#include <httplib.h>

#include "shary/service/api.hpp"
#include "shary/service/state_json.hpp"

namespace shary::service {

namespace {

ApiRequest convert(const httplib::Request& in) {
  ApiRequest r;
  r.method = in.method;
  r.path = in.path;
  for (const auto& [k, v] : in.params) r.query.emplace(k, v);
  std::string auth = in.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (auth.rfind(prefix, 0) == 0) r.bearer = auth.substr(prefix.size());
  r.idempotency_key = in.get_header_value("Idempotency-Key");
  r.content_type = in.get_header_value("Content-Type");
  r.body = in.body;
  return r;
}

}  // namespace

bool WebhookTransport::deliver(const Notification& n, const UserRecord& user, std::string& error) {
  static const std::regex url(R"((https?://[^/]+)(/.*)?)");
  std::smatch m;
  if (!std::regex_match(user.webhook, m, url)) {
    error = "invalid webhook url '" + user.webhook + "'";
    return false;
  }
  httplib::Client client(m[1].str());
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  std::string path = m[2].matched ? m[2].str() : "/";
  auto res = client.Post(path, to_json(n).dump(), "application/json");
  if (!res) {
    error = httplib::to_string(res.error());
    return false;
  }
  if (res->status < 200 || res->status >= 300) {
    error = "http " + std::to_string(res->status);
    return false;
  }
  return true;
}

ApiServer::ApiServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& in, httplib::Response& out) {
    ApiResponse r = handle_request(service_, convert(in));
    out.status = r.status;
    for (const auto& [k, v] : r.headers) out.set_header(k, v);
    out.set_content(r.body.dump(), "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Delete(".*", handler);
  server_->Put(".*", handler);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ <= 0) throw Error(ErrorCode::bind_failure, "cannot bind " + host);
  } else {
    if (!server_->bind_to_port(host, port))
      throw Error(ErrorCode::bind_failure, "cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  return port_;
}

void ApiServer::listen() { server_->listen_after_bind(); }

void ApiServer::start() {
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
}

void ApiServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace shary::service
