#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "json.hpp"
#include "soei/error.hpp"
#include "soei/session_service.hpp"

namespace soei {

int http_status_for(ErrorCode code);
nlohmann::json error_body(std::string_view code, std::string_view message);

// "host:port", ":port" or "port".
std::pair<std::string, int> parse_bind_addr(std::string_view addr);

// JSON API over a SessionService. Every handler answers with either the
// documented body or {"error": {"code", "message"}}.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; pair with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace soei
