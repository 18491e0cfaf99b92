#include <httplib.h>

#include "soei/error.hpp"
#include "soei/gateway.hpp"

namespace soei {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "URL lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers, int timeout_ms) override {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    if (!client.is_valid()) throw Error(ErrorCode::Transport, "unsupported backend URL " + origin);
    auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Post(path, hdrs, body, "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout) {
        throw Error(ErrorCode::Timeout, "backend timed out after " + std::to_string(timeout_ms) + " ms");
      }
      if (err == httplib::Error::Read) {
        throw Error(ErrorCode::Timeout, "no response from backend within " + std::to_string(timeout_ms) + " ms");
      }
      throw Error(ErrorCode::Transport, "transport failure: " + httplib::to_string(err));
    }
    return {res->status, res->body};
  }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

}  // namespace soei
