#include "soei/gateway.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "soei/json_io.hpp"
#include "soei/text_util.hpp"

namespace soei {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// A completed round trip is never reported as 0 ms.
std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start).count();
  return std::max<std::int64_t>(1, (us + 999) / 1000);
}

bool retryable_status(int status) { return status >= 500 || status == 429; }

json messages_json(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  return arr;
}

json request_json(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) {
  return json{{"model", cfg.model_name},
              {"messages", messages_json(messages)},
              {"temperature", cfg.temperature},
              {"max_tokens", cfg.max_tokens}};
}

std::string utc_timestamp() {
  auto t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void validate_backend_config(const BackendConfig& cfg) {
  if (!(cfg.temperature >= 0.0 && cfg.temperature <= 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
  }
  if (cfg.timeout_ms < 1) throw Error(ErrorCode::InvalidArgument, "timeout_ms must be >= 1");
  if (cfg.max_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_tokens must be >= 1");
  if (cfg.max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 0");
}

BackendConfig default_backend_config(BackendRole role) {
  BackendConfig cfg;
  if (role == BackendRole::Judge) {
    cfg.base_url = env_or("SOEI_JUDGE_BASE_URL", env_or("SOEI_LLM_BASE_URL", "http://127.0.0.1:8000/v1"));
    cfg.api_key_env = "SOEI_JUDGE_API_KEY";
    cfg.model_name = env_or("SOEI_JUDGE_MODEL", "judge");
    cfg.temperature = 0.0;
  } else {
    cfg.base_url = env_or("SOEI_LLM_BASE_URL", "http://127.0.0.1:8000/v1");
    cfg.api_key_env = "SOEI_LLM_API_KEY";
    cfg.model_name = env_or("SOEI_LLM_MODEL", role == BackendRole::Student ? "student" : "generator");
    cfg.temperature = 0.7;
  }
  return cfg;
}

// ---------------------------------------------------------------------------

std::string chat_request_body(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) {
  return request_json(cfg, messages).dump();
}

ChatResult parse_chat_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::Transport, "malformed response body");
  }
  ChatResult r;
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    r.content = content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Transport, "response has no choices[0].message.content");
  }
  if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
    r.usage.prompt_tokens = u->value("prompt_tokens", 0);
    r.usage.completion_tokens = u->value("completion_tokens", 0);
  }
  return r;
}

Gateway::Gateway(std::shared_ptr<Transport> transport, BackoffPolicy backoff, Sleeper sleeper, std::uint64_t seed)
    : transport_(std::move(transport)), backoff_(backoff), sleeper_(std::move(sleeper)), rng_(seed) {
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "gateway requires a transport");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds Gateway::jitter(int attempt) {
  double ceiling = static_cast<double>(backoff_.base.count()) * std::pow(backoff_.factor, attempt);
  ceiling = std::min(ceiling, static_cast<double>(backoff_.cap.count()));
  std::lock_guard lock(rng_mutex_);
  std::uniform_real_distribution<double> dist(0.0, ceiling);
  return std::chrono::milliseconds(static_cast<std::int64_t>(dist(rng_)));
}

ChatResult Gateway::chat(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) {
  validate_backend_config(cfg);
  validate_messages(messages);
  const auto body = chat_request_body(cfg, messages);
  std::vector<std::pair<std::string, std::string>> headers;
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
      headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }
  auto url = cfg.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";

  for (int attempt = 0;; ++attempt) {
    auto retry_or_give_up = [&](const Error& e) {
      if (attempt >= cfg.max_retries) {
        throw Error(ErrorCode::ExhaustedRetries, "gave up after " + std::to_string(attempt + 1) +
                                                     " attempts; last error: " + e.what());
      }
      sleeper_(jitter(attempt));
    };
    auto start = std::chrono::steady_clock::now();
    HttpResponse resp;
    try {
      resp = transport_->post(url, body, headers, cfg.timeout_ms);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Timeout && e.code() != ErrorCode::Transport) throw;
      if (cfg.max_retries == 0) throw;
      retry_or_give_up(e);
      continue;
    }
    if (resp.status >= 200 && resp.status < 300) {
      auto result = parse_chat_response(resp.body);
      result.latency_ms = elapsed_ms(start);
      return result;
    }
    BadStatusError err(resp.status, resp.body.substr(0, 200));
    if (!retryable_status(resp.status) || cfg.max_retries == 0) throw err;
    retry_or_give_up(err);
  }
}

// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::InvalidArgument, "sha256 failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string request_hash(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) {
  return sha256_hex(request_json(cfg, messages).dump());
}

std::optional<CassetteMode> parse_cassette_mode(std::string_view text) {
  auto s = text::to_lower_ascii(text);
  if (s == "record") return CassetteMode::Record;
  if (s == "replay") return CassetteMode::Replay;
  if (s == "live") return CassetteMode::Live;
  return std::nullopt;
}

CassetteBackend::CassetteBackend(CassetteMode mode, std::filesystem::path path, std::shared_ptr<ChatBackend> inner)
    : mode_(mode), path_(std::move(path)), inner_(std::move(inner)) {
  if (mode_ != CassetteMode::Replay && !inner_) {
    throw Error(ErrorCode::InvalidArgument, "record and live modes need an inner backend");
  }
  if (mode_ == CassetteMode::Live) return;
  if (!std::filesystem::exists(path_)) {
    if (mode_ == CassetteMode::Replay) throw Error(ErrorCode::StorageFailure, "cassette not found: " + path_.string());
    return;
  }
  for (const auto& entry : read_jsonl_file(path_)) {
    ChatResult r;
    const auto& resp = entry.at("response");
    r.content = resp.at("content").get<std::string>();
    r.latency_ms = resp.value("latency_ms", std::int64_t{1});
    if (resp.contains("usage")) {
      r.usage.prompt_tokens = resp["usage"].value("prompt_tokens", 0);
      r.usage.completion_tokens = resp["usage"].value("completion_tokens", 0);
    }
    entries_[entry.at("hash").get<std::string>()].results.push_back(std::move(r));
  }
}

std::size_t CassetteBackend::entry_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, slot] : entries_) n += slot.results.size();
  return n;
}

ChatResult CassetteBackend::chat(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) {
  if (mode_ == CassetteMode::Live) return inner_->chat(cfg, messages);
  validate_messages(messages);
  const auto hash = request_hash(cfg, messages);
  if (mode_ == CassetteMode::Replay) {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(hash);
    if (it == entries_.end()) throw Error(ErrorCode::CassetteMiss, "no cassette entry for request " + hash);
    auto& slot = it->second;
    const auto& r = slot.results[std::min(slot.next, slot.results.size() - 1)];
    if (slot.next < slot.results.size()) ++slot.next;
    return r;
  }

  auto result = inner_->chat(cfg, messages);
  json line = {{"hash", hash},
               {"request", request_json(cfg, messages)},
               {"response",
                {{"content", result.content},
                 {"latency_ms", result.latency_ms},
                 {"usage",
                  {{"prompt_tokens", result.usage.prompt_tokens},
                   {"completion_tokens", result.usage.completion_tokens}}}}},
               {"recorded_at", utc_timestamp()}};
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot append to cassette " + path_.string());
  out << line.dump() << '\n';
  auto& slot = entries_[hash];
  slot.results.push_back(result);
  return result;
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<Reply> script, Fallback fallback)
    : script_(script.begin(), script.end()), fallback_(std::move(fallback)) {}

void ScriptedBackend::push(Reply reply) {
  std::lock_guard lock(mutex_);
  script_.push_back(std::move(reply));
}

std::vector<std::vector<ChatMessage>> ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

ChatResult ScriptedBackend::chat(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) {
  auto start = std::chrono::steady_clock::now();
  validate_messages(messages);
  std::optional<Reply> reply;
  {
    std::lock_guard lock(mutex_);
    calls_.push_back(messages);
    if (!script_.empty()) {
      reply = std::move(script_.front());
      script_.pop_front();
    }
  }
  ChatResult r;
  if (reply) {
    if (const auto* code = std::get_if<ErrorCode>(&*reply)) {
      throw Error(*code, "scripted failure: " + std::string(to_string(*code)));
    }
    r.content = std::get<std::string>(*reply);
  } else if (fallback_) {
    r.content = fallback_(cfg, messages);
  } else {
    throw Error(ErrorCode::Transport, "scripted backend has no reply left");
  }
  r.latency_ms = elapsed_ms(start);
  return r;
}

}  // namespace soei
