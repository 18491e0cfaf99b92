#include "soei/http_server.hpp"

#include <charconv>

#include "httplib.h"
#include "soei/json_io.hpp"

namespace soei {

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::SessionEnded:
    case ErrorCode::TurnInFlight:
    case ErrorCode::NotEnded:
    case ErrorCode::PendingTurnMismatch:
    case ErrorCode::TurnLimit: return 409;
    case ErrorCode::GatewayError:
    case ErrorCode::JudgeUnavailable:
    case ErrorCode::Timeout:
    case ErrorCode::Transport:
    case ErrorCode::BadStatus:
    case ErrorCode::ExhaustedRetries:
    case ErrorCode::CassetteMiss: return 502;
    case ErrorCode::StorageFailure: return 500;
    default: return 400;
  }
}

json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", std::string(code)}, {"message", std::string(message)}}}};
}

std::pair<std::string, int> parse_bind_addr(std::string_view addr) {
  std::string host = "127.0.0.1";
  std::string_view port_part = addr;
  if (auto colon = addr.rfind(':'); colon != std::string_view::npos) {
    if (colon > 0) host = std::string(addr.substr(0, colon));
    port_part = addr.substr(colon + 1);
  }
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_part.data(), port_part.data() + port_part.size(), port);
  if (ec != std::errc{} || ptr != port_part.data() + port_part.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "bad bind address '" + std::string(addr) + "'");
  }
  return {host, port};
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  return j;
}

std::string required_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::string optional_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_json(res, http_status_for(e.code()), error_body(to_string(e.code()), e.what()));
    } catch (const json::exception& e) {
      send_json(res, 400, error_body(to_string(ErrorCode::InvalidArgument), e.what()));
    } catch (const std::exception& e) {
      send_json(res, 500, error_body("Internal", e.what()));
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(SessionService& svc) : service(svc) {}
  SessionService& service;
  httplib::Server server;
};

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& s = impl_->server;
  const std::string id = "([A-Za-z0-9_-]+)";

  s.Post("/v1/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           auto body = parse_body(req);
           auto session = svc.create_session(required_string(body, "teacher_id"), required_string(body, "trait"),
                                             optional_string(body, "content_ref"),
                                             optional_string(body, "backend_label"));
           send_json(res, 201, session);
         }));
  s.Post("/v1/sessions/" + id + "/turns", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           auto body = parse_body(req);
           auto turn = svc.post_teacher_turn(req.matches[1], required_string(body, "text"));
           send_json(res, 200, {{"student_turn", turn}});
         }));
  s.Post("/v1/sessions/" + id + "/end", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, svc.end_session(req.matches[1]));
         }));
  s.Post("/v1/sessions/" + id + "/survey", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           svc.submit_survey(req.matches[1], parse_body(req).get<SurveyResponse>());
           res.status = 204;
         }));
  s.Get("/v1/sessions/" + id, guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, svc.get_transcript(req.matches[1]));
        }));
  s.Get("/v1/sessions/" + id + "/analysis", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          res.status = 200;
          res.set_content(svc.analyze_session(req.matches[1]), "application/json");
        }));
  s.Get("/v1/stats", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          StatsFilter filter;
          if (auto v = req.get_param_value("teacher_id"); !v.empty()) filter.teacher_id = v;
          if (auto v = req.get_param_value("trait"); !v.empty()) filter.trait = parse_trait_or_throw(v);
          send_json(res, 200, svc.session_stats(filter));
        }));

  // unmatched routes and methods
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto code = to_string(res.status == 404 ? ErrorCode::NotFound : ErrorCode::InvalidArgument);
    send_json(res, res.status, error_body(code, "no route for " + req.method + " " + req.path));
  });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace soei
