#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gemba/core.hpp"
#include "gemba/prompt.hpp"

namespace gemba::llm {

// One chat-completion request. The first message must be the system turn;
// temperature defaults to 0 so runs are reproducible and cacheable.
class CompletionRequest {
 public:
  CompletionRequest(std::string model_id,
                    std::vector<prompt::ChatMessage> messages,
                    double temperature = 0.0, int max_tokens = 512);

  const std::string& model_id() const { return model_id_; }
  const std::vector<prompt::ChatMessage>& messages() const { return messages_; }
  double temperature() const { return temperature_; }
  int max_tokens() const { return max_tokens_; }

 private:
  std::string model_id_;
  std::vector<prompt::ChatMessage> messages_;
  double temperature_;
  int max_tokens_;
};

struct CompletionResult {
  std::string text;
  bool from_cache = false;
  uint64_t latency_ms = 0;
  // Network attempts behind this result: 0 on a cache hit, >= 1 otherwise.
  int attempt_count = 0;
};

enum class ClientErrorKind {
  kAuth,             // bad or missing credential; retrying cannot help
  kRateLimited,      // server pushback; retry after the advised delay
  kTimeout,          // timeout or transient transport/server failure
  kContentFiltered,  // endpoint refused the content; segment is unannotatable
  kMalformedResponse,
};

std::string_view to_string(ClientErrorKind kind);

class ClientError : public std::runtime_error {
 public:
  ClientError(ClientErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ClientErrorKind kind() const { return kind_; }
  bool retryable() const {
    return kind_ == ClientErrorKind::kRateLimited ||
           kind_ == ClientErrorKind::kTimeout;
  }

 private:
  ClientErrorKind kind_;
};

// The JSON document POSTed to the endpoint. Also the canonical byte string
// behind cache_key, so any change to any request field changes the key.
nlohmann::json wire_body(const CompletionRequest& request);

// Content hash (hex SHA-256) over model, temperature, max_tokens, and every
// message role and content.
std::string cache_key(const CompletionRequest& request);

// Content-addressed on-disk response store: one JSON file per key, holding
// the request digest, model id, response text, and a timestamp. Writers go
// through a temp file plus atomic rename, so concurrent annotators are safe
// (values are deterministic functions of keys; last writer wins).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& response_text,
             const std::string& model_id);

  const std::filesystem::path& directory() const { return directory_; }

  struct Entry {
    std::string key;
    std::string model_id;
    std::string response_text;
    std::string created_at;
  };
  std::optional<Entry> read_entry(const std::string& key) const;
  std::vector<Entry> all_entries() const;  // sorted by key
  size_t entry_count() const;

  struct Stats {
    size_t hits = 0;
    size_t misses = 0;
    size_t stores = 0;
  };
  Stats stats() const;

 private:
  std::filesystem::path entry_path(const std::string& key) const;

  std::filesystem::path directory_;
  mutable std::atomic<size_t> hits_{0};
  mutable std::atomic<size_t> misses_{0};
  std::atomic<size_t> stores_{0};
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

// Deterministic offline client: scripted text for known cache keys, a
// configurable fallback for unknown ones (strict mode errors instead).
// Never touches the network. Thread-safe.
class MockChatClient : public ChatClient {
 public:
  static constexpr std::string_view kNoErrorFallback =
      "Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error";

  explicit MockChatClient(std::map<std::string, std::string> script = {},
                          bool strict = false);

  // Scripts a response for exactly this request.
  void script(const CompletionRequest& request, std::string response_text);
  void set_fallback(std::string response_text);

  CompletionResult complete(const CompletionRequest& request) override;

  size_t call_count() const { return call_count_.load(); }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> script_;
  std::string fallback_{kNoErrorFallback};
  bool strict_;
  std::atomic<size_t> call_count_{0};
};

// Decorator adding read-through caching: hits return the stored text with
// zero network attempts; misses delegate and persist before returning.
class CachingChatClient : public ChatClient {
 public:
  CachingChatClient(std::shared_ptr<ChatClient> inner,
                    std::shared_ptr<ResponseCache> cache);

  CompletionResult complete(const CompletionRequest& request) override;

  ResponseCache& cache() { return *cache_; }

 private:
  std::shared_ptr<ChatClient> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_delay{30000};
};

struct HttpClientConfig {
  std::string endpoint_url;  // full URL of the chat-completion route
  std::string api_key;
  RetryPolicy retry;
  std::chrono::seconds request_timeout{120};
  // Injectable for tests; defaults to a real sleep.
  std::function<void(std::chrono::milliseconds)> sleep_fn;
  uint64_t jitter_seed = 0;  // 0 = seed from std::random_device
};

// Reads GEMBA_API_URL and GEMBA_API_KEY. Throws if the URL is missing.
HttpClientConfig http_config_from_env();

// HTTP transport speaking the plain chat-completion JSON protocol. Retries
// rate limits and transient failures with exponential backoff and full
// jitter, honoring a server-advised Retry-After delay exactly. Shareable
// across threads; each attempt uses its own connection.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpClientConfig config);

  CompletionResult complete(const CompletionRequest& request) override;

 private:
  std::chrono::milliseconds backoff_delay(int attempt);

  HttpClientConfig config_;
  std::string host_base_;  // scheme://host[:port]
  std::string path_;
  std::mutex rng_mutex_;
  uint64_t rng_state_;
};

}  // namespace gemba::llm
