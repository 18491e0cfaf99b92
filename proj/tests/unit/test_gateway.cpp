#include <deque>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "soei/error.hpp"
#include "soei/gateway.hpp"
#include "soei/json_io.hpp"
#include "test_support.hpp"

using namespace soei;

namespace {

std::string ok_body(const std::string& content) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
              {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 4}}}}
      .dump();
}

// Scripted transport: each entry is a status/body pair or a thrown code.
class FakeTransport : public Transport {
 public:
  using Step = std::variant<HttpResponse, ErrorCode>;
  explicit FakeTransport(std::deque<Step> steps) : steps_(std::move(steps)) {}

  HttpResponse post(const std::string& url, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers, int) override {
    urls.push_back(url);
    bodies.push_back(body);
    last_headers = headers;
    REQUIRE_FALSE(steps_.empty());
    auto step = steps_.front();
    steps_.pop_front();
    if (auto* code = std::get_if<ErrorCode>(&step)) throw Error(*code, "scripted failure");
    return std::get<HttpResponse>(step);
  }

  std::vector<std::string> urls;
  std::vector<std::string> bodies;
  std::vector<std::pair<std::string, std::string>> last_headers;

 private:
  std::deque<Step> steps_;
};

struct Sleeps {
  std::vector<std::chrono::milliseconds> calls;
  Gateway::Sleeper fn() {
    return [this](std::chrono::milliseconds d) { calls.push_back(d); };
  }
};

BackendConfig cfg(int retries = 3) {
  BackendConfig c;
  c.base_url = "http://backend.test/v1";
  c.model_name = "m";
  c.api_key_env = "SOEI_TEST_KEY";
  c.max_retries = retries;
  return c;
}

const std::vector<ChatMessage> kMessages = {{ChatRole::System, "sys"}, {ChatRole::User, "Who wrote it?"}};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected soei::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("request body shape") {
  auto body = json::parse(chat_request_body(cfg(), kMessages));
  CHECK(body["model"] == "m");
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"] == "Who wrote it?");
  CHECK(body["max_tokens"] == 512);
}

TEST_CASE("successful call returns content, usage and positive latency") {
  ::setenv("SOEI_TEST_KEY", "sekret", 1);
  auto t = std::make_shared<FakeTransport>(std::deque<FakeTransport::Step>{HttpResponse{200, ok_body("Um, it's Li Bai.")}});
  Gateway g(t, {}, [](auto) {}, 1);
  auto r = g.chat(cfg(), kMessages);
  CHECK(r.content == "Um, it's Li Bai.");
  CHECK(r.latency_ms > 0);
  CHECK(r.usage.prompt_tokens == 11);
  CHECK(t->urls[0] == "http://backend.test/v1/chat/completions");
  bool auth = false;
  for (const auto& [k, v] : t->last_headers) auth = auth || (k == "Authorization" && v == "Bearer sekret");
  CHECK(auth);
  ::unsetenv("SOEI_TEST_KEY");
}

TEST_CASE("5xx twice then success on the third attempt") {
  auto t = std::make_shared<FakeTransport>(std::deque<FakeTransport::Step>{
      HttpResponse{500, "x"}, HttpResponse{503, "y"}, HttpResponse{200, ok_body("fine")}});
  Sleeps sleeps;
  Gateway g(t, {}, sleeps.fn(), 7);
  CHECK(g.chat(cfg(3), kMessages).content == "fine");
  CHECK(t->bodies.size() == 3);
  REQUIRE(sleeps.calls.size() == 2);
  CHECK(sleeps.calls[0].count() <= 500);
  CHECK(sleeps.calls[1].count() <= 1000);
}

TEST_CASE("no retries surfaces the status") {
  auto t = std::make_shared<FakeTransport>(std::deque<FakeTransport::Step>{HttpResponse{500, "boom"}});
  Gateway g(t, {}, [](auto) {}, 1);
  try {
    g.chat(cfg(0), kMessages);
    FAIL("expected BadStatusError");
  } catch (const BadStatusError& e) {
    CHECK(e.status() == 500);
    CHECK(e.code() == ErrorCode::BadStatus);
  }
}

TEST_CASE("4xx is not retried") {
  auto t = std::make_shared<FakeTransport>(std::deque<FakeTransport::Step>{HttpResponse{400, "bad"}});
  Gateway g(t, {}, [](auto) {}, 1);
  CHECK(code_of([&] { g.chat(cfg(3), kMessages); }) == ErrorCode::BadStatus);
  CHECK(t->bodies.size() == 1);
}

TEST_CASE("transport errors exhaust retries") {
  auto t = std::make_shared<FakeTransport>(std::deque<FakeTransport::Step>{
      ErrorCode::Timeout, ErrorCode::Transport, HttpResponse{429, "slow"}});
  Sleeps sleeps;
  Gateway g(t, {}, sleeps.fn(), 3);
  CHECK(code_of([&] { g.chat(cfg(2), kMessages); }) == ErrorCode::ExhaustedRetries);
  CHECK(t->bodies.size() == 3);
  CHECK(sleeps.calls.size() == 2);
}

TEST_CASE("backoff jitter stays under the capped envelope") {
  std::deque<FakeTransport::Step> steps(8, HttpResponse{502, ""});
  auto t = std::make_shared<FakeTransport>(steps);
  Sleeps sleeps;
  BackoffPolicy policy{std::chrono::milliseconds(100), 2.0, std::chrono::milliseconds(400)};
  Gateway g(t, policy, sleeps.fn(), 11);
  CHECK(code_of([&] { g.chat(cfg(7), kMessages); }) == ErrorCode::ExhaustedRetries);
  REQUIRE(sleeps.calls.size() == 7);
  for (std::size_t i = 0; i < sleeps.calls.size(); ++i) {
    const long long bound = std::min<long long>(400, 100LL << i);
    CHECK(sleeps.calls[i].count() >= 0);
    CHECK(sleeps.calls[i].count() <= bound);
  }
}

TEST_CASE("malformed success body is a transport error") {
  CHECK(code_of([] { parse_chat_response("{\"choices\":[]}"); }) == ErrorCode::Transport);
  CHECK(code_of([] { parse_chat_response("not json"); }) == ErrorCode::Transport);
  auto t = std::make_shared<FakeTransport>(std::deque<FakeTransport::Step>{HttpResponse{200, "{}"}});
  Gateway g(t, {}, [](auto) {}, 1);
  CHECK(code_of([&] { g.chat(cfg(3), kMessages); }) == ErrorCode::Transport);
  CHECK(t->bodies.size() == 1);
}

TEST_CASE("config validation") {
  auto c = cfg();
  c.temperature = 2.5;
  CHECK(code_of([&] { validate_backend_config(c); }) == ErrorCode::InvalidArgument);
  c = cfg();
  c.max_retries = -1;
  CHECK(code_of([&] { validate_backend_config(c); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sha256 known vector and hash sensitivity") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto a = request_hash(cfg(), kMessages);
  auto other = cfg();
  other.temperature = 0.1;
  CHECK(a == request_hash(cfg(), kMessages));
  CHECK(a != request_hash(other, kMessages));
}

TEST_CASE("cassette record then replay") {
  test::TempDir dir;
  const auto path = dir / "c.jsonl";
  auto inner = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>{"first", "second"});
  {
    CassetteBackend rec(CassetteMode::Record, path, inner);
    CHECK(rec.chat(cfg(), kMessages).content == "first");
    CHECK(rec.chat(cfg(), kMessages).content == "second");
  }
  auto dead = std::make_shared<ScriptedBackend>();
  CassetteBackend replay(CassetteMode::Replay, path, dead);
  CHECK(replay.chat(cfg(), kMessages).content == "first");
  CHECK(replay.chat(cfg(), kMessages).content == "second");
  CHECK(replay.chat(cfg(), kMessages).content == "second");
  CHECK(dead->call_count() == 0);
  CHECK(code_of([&] { replay.chat(cfg(), {{ChatRole::User, "unseen"}}); }) == ErrorCode::CassetteMiss);

  CHECK(code_of([&] { CassetteBackend(CassetteMode::Replay, dir / "missing.jsonl", dead); }) ==
        ErrorCode::StorageFailure);
  CHECK(parse_cassette_mode("replay") == CassetteMode::Replay);
  CHECK_FALSE(parse_cassette_mode("rewind").has_value());
}

TEST_CASE("scripted backend") {
  ScriptedBackend b({std::string("a"), ErrorCode::Timeout}, [](const BackendConfig&, const auto& m) {
    return "echo:" + m.back().content;
  });
  CHECK(b.chat(cfg(), kMessages).content == "a");
  CHECK(code_of([&] { b.chat(cfg(), kMessages); }) == ErrorCode::Timeout);
  CHECK(b.chat(cfg(), kMessages).content == "echo:Who wrote it?");
  CHECK(b.call_count() == 3);
  ScriptedBackend empty;
  CHECK(code_of([&] { empty.chat(cfg(), kMessages); }) == ErrorCode::Transport);
}

TEST_CASE("http transport against a local server") {
  httplib::Server server;
  int hits = 0;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    if (hits == 1) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    auto body = json::parse(req.body);
    res.set_content(ok_body("echo " + body["messages"].back()["content"].get<std::string>()), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto c = cfg(2);
  c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  Gateway g(make_http_transport(), {}, [](auto) {}, 5);
  auto r = g.chat(c, kMessages);
  CHECK(r.content == "echo Who wrote it?");
  CHECK(hits == 2);

  server.stop();
  th.join();

  c.max_retries = 0;
  CHECK(code_of([&] { g.chat(c, kMessages); }) == ErrorCode::Transport);
}
