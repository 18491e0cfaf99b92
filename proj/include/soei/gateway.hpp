#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "soei/chat_types.hpp"
#include "soei/error.hpp"

namespace soei {

struct BackendConfig {
  std::string base_url;
  std::string model_name;
  // Name of the environment variable holding the key. The key itself is
  // never stored in the config.
  std::string api_key_env;
  double temperature = 0.7;
  int max_tokens = 512;
  int timeout_ms = 60000;
  int max_retries = 3;
};

void validate_backend_config(const BackendConfig& cfg);

enum class BackendRole { Student, Generator, Judge };

// Role defaults, with base URL and key variable taken from SOEI_LLM_* or
// SOEI_JUDGE_*.
BackendConfig default_backend_config(BackendRole role);

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResult {
  std::string content;
  std::int64_t latency_ms = 0;
  TokenUsage usage;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResult chat(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) = 0;
};

// ---------------------------------------------------------------------------
// HTTP gateway
// ---------------------------------------------------------------------------

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Raw POST. Implementations throw Error(Timeout) or Error(Transport).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers, int timeout_ms) = 0;
};

std::shared_ptr<Transport> make_http_transport();

struct BackoffPolicy {
  std::chrono::milliseconds base{500};
  double factor = 2.0;
  std::chrono::milliseconds cap{30000};
};

// Chat-completions client. Safe to share across threads.
class Gateway : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(std::shared_ptr<Transport> transport, BackoffPolicy backoff = {}, Sleeper sleeper = {},
                   std::uint64_t seed = std::random_device{}());

  ChatResult chat(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) override;

 private:
  std::chrono::milliseconds jitter(int attempt);

  std::shared_ptr<Transport> transport_;
  BackoffPolicy backoff_;
  Sleeper sleeper_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

std::string chat_request_body(const BackendConfig& cfg, const std::vector<ChatMessage>& messages);
// Throws Error(Transport) when the body lacks choices[0].message.content.
ChatResult parse_chat_response(const std::string& body);

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view data);

// Digest over model name, messages, temperature and max_tokens.
std::string request_hash(const BackendConfig& cfg, const std::vector<ChatMessage>& messages);

enum class CassetteMode { Record, Replay, Live };
std::optional<CassetteMode> parse_cassette_mode(std::string_view text);

// Replay serves recorded responses by request hash. Repeated identical
// requests walk through the entries recorded for that hash in order and then
// keep returning the last one.
class CassetteBackend : public ChatBackend {
 public:
  CassetteBackend(CassetteMode mode, std::filesystem::path path, std::shared_ptr<ChatBackend> inner);

  ChatResult chat(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) override;

  CassetteMode mode() const { return mode_; }
  std::size_t entry_count() const;

 private:
  struct Slot {
    std::vector<ChatResult> results;
    std::size_t next = 0;
  };

  CassetteMode mode_;
  std::filesystem::path path_;
  std::shared_ptr<ChatBackend> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, Slot> entries_;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

// Offline backend: pops scripted replies in order, then falls back to
// `fallback` (if set). Every call is recorded for inspection.
class ScriptedBackend : public ChatBackend {
 public:
  using Reply = std::variant<std::string, ErrorCode>;
  using Fallback = std::function<std::string(const BackendConfig&, const std::vector<ChatMessage>&)>;

  explicit ScriptedBackend(std::vector<Reply> script = {}, Fallback fallback = {});

  ChatResult chat(const BackendConfig& cfg, const std::vector<ChatMessage>& messages) override;

  void push(Reply reply);
  std::vector<std::vector<ChatMessage>> calls() const;
  std::size_t call_count() const;

 private:
  mutable std::mutex mutex_;
  std::deque<Reply> script_;
  Fallback fallback_;
  std::vector<std::vector<ChatMessage>> calls_;
};

}  // namespace soei
