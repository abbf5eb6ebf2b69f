#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "gemba/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <regex>
#include <thread>

#include <unistd.h>

#include "gemba/digest.hpp"

namespace gemba::llm {

namespace {

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool safe_cache_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                    (c >= 'A' && c <= 'Z') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

// Response entries are named by their hex digest; the run manifest and other
// sidecar files in the cache directory are not entries.
bool entry_stem(const std::string& stem) {
  if (stem.size() != 64) return false;
  for (char c : stem) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t elapsed_ms_since(std::chrono::steady_clock::time_point start) {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start)
          .count());
}

}  // namespace

std::string_view to_string(ClientErrorKind kind) {
  switch (kind) {
    case ClientErrorKind::kAuth: return "auth error";
    case ClientErrorKind::kRateLimited: return "rate limited";
    case ClientErrorKind::kTimeout: return "timeout";
    case ClientErrorKind::kContentFiltered: return "content filtered";
    case ClientErrorKind::kMalformedResponse: return "malformed response";
  }
  return "client error";
}

CompletionRequest::CompletionRequest(std::string model_id,
                                     std::vector<prompt::ChatMessage> messages,
                                     double temperature, int max_tokens)
    : model_id_(std::move(model_id)),
      messages_(std::move(messages)),
      temperature_(temperature),
      max_tokens_(max_tokens) {
  if (messages_.empty()) {
    throw std::invalid_argument("completion request needs messages");
  }
  if (messages_.front().role() != prompt::Role::kSystem) {
    throw std::invalid_argument("first message must be the system turn");
  }
  if (!(temperature_ >= 0.0)) {
    throw std::invalid_argument("temperature must be nonnegative");
  }
  if (max_tokens_ <= 0) {
    throw std::invalid_argument("max_tokens must be positive");
  }
}

nlohmann::json wire_body(const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& message : request.messages()) {
    messages.push_back({{"role", std::string(to_string(message.role()))},
                        {"content", message.content()}});
  }
  return nlohmann::json{{"model", request.model_id()},
                        {"messages", std::move(messages)},
                        {"temperature", request.temperature()},
                        {"max_tokens", request.max_tokens()}};
}

std::string cache_key(const CompletionRequest& request) {
  return sha256_hex(wire_body(request).dump());
}

ResponseCache::ResponseCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::filesystem::path ResponseCache::entry_path(const std::string& key) const {
  if (!safe_cache_key(key)) {
    throw std::invalid_argument("unsafe cache key: " + key);
  }
  return directory_ / (key + ".json");
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  auto entry = read_entry(key);
  if (!entry) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return std::move(entry->response_text);
}

std::optional<ResponseCache::Entry> ResponseCache::read_entry(
    const std::string& key) const {
  std::ifstream in(entry_path(key), std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json body = nlohmann::json::parse(in, nullptr, false);
  if (body.is_discarded() || !body.contains("response")) {
    // A damaged entry counts as a miss; the next store overwrites it.
    return std::nullopt;
  }
  Entry entry;
  entry.key = key;
  entry.model_id = body.value("model_id", "");
  entry.response_text = body["response"].get<std::string>();
  entry.created_at = body.value("created_at", "");
  return entry;
}

void ResponseCache::store(const std::string& key,
                          const std::string& response_text,
                          const std::string& model_id) {
  const nlohmann::json body{{"request_digest", key},
                            {"model_id", model_id},
                            {"response", response_text},
                            {"created_at", iso8601_utc_now()}};
  static std::atomic<uint64_t> temp_counter{0};
  const std::filesystem::path final_path = entry_path(key);
  const std::filesystem::path temp_path =
      directory_ / (key + ".tmp." + std::to_string(::getpid()) + "." +
                    std::to_string(temp_counter.fetch_add(1)));
  {
    std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write cache entry: " +
                               temp_path.string());
    }
    out << body.dump(2) << '\n';
  }
  std::filesystem::rename(temp_path, final_path);
  ++stores_;
}

std::vector<ResponseCache::Entry> ResponseCache::all_entries() const {
  std::vector<std::string> keys;
  for (const auto& item : std::filesystem::directory_iterator(directory_)) {
    if (!item.is_regular_file()) continue;
    const auto path = item.path();
    if (path.extension() != ".json") continue;
    const std::string stem = path.stem().string();
    if (!entry_stem(stem)) continue;
    keys.push_back(stem);
  }
  std::sort(keys.begin(), keys.end());
  std::vector<Entry> entries;
  entries.reserve(keys.size());
  for (const auto& key : keys) {
    if (auto entry = read_entry(key)) entries.push_back(std::move(*entry));
  }
  return entries;
}

size_t ResponseCache::entry_count() const {
  size_t count = 0;
  for (const auto& item : std::filesystem::directory_iterator(directory_)) {
    if (item.is_regular_file() && item.path().extension() == ".json" &&
        entry_stem(item.path().stem().string())) {
      ++count;
    }
  }
  return count;
}

ResponseCache::Stats ResponseCache::stats() const {
  return Stats{hits_.load(), misses_.load(), stores_.load()};
}

MockChatClient::MockChatClient(std::map<std::string, std::string> script,
                               bool strict)
    : script_(std::move(script)), strict_(strict) {}

void MockChatClient::script(const CompletionRequest& request,
                            std::string response_text) {
  std::lock_guard lock(mutex_);
  script_[cache_key(request)] = std::move(response_text);
}

void MockChatClient::set_fallback(std::string response_text) {
  std::lock_guard lock(mutex_);
  fallback_ = std::move(response_text);
}

CompletionResult MockChatClient::complete(const CompletionRequest& request) {
  ++call_count_;
  const std::string key = cache_key(request);
  std::lock_guard lock(mutex_);
  const auto it = script_.find(key);
  if (it == script_.end() && strict_) {
    throw std::out_of_range("mock client has no scripted response for key " +
                            key);
  }
  CompletionResult result;
  result.text = it != script_.end() ? it->second : fallback_;
  result.from_cache = false;
  result.latency_ms = 0;
  result.attempt_count = 1;
  return result;
}

CachingChatClient::CachingChatClient(std::shared_ptr<ChatClient> inner,
                                     std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  if (!inner_ || !cache_) {
    throw std::invalid_argument("caching client needs an inner client and a cache");
  }
}

CompletionResult CachingChatClient::complete(const CompletionRequest& request) {
  const std::string key = cache_key(request);
  const auto start = std::chrono::steady_clock::now();
  if (auto hit = cache_->lookup(key)) {
    CompletionResult result;
    result.text = std::move(*hit);
    result.from_cache = true;
    result.latency_ms = elapsed_ms_since(start);
    result.attempt_count = 0;
    return result;
  }
  CompletionResult result = inner_->complete(request);
  cache_->store(key, result.text, request.model_id());
  return result;
}

HttpClientConfig http_config_from_env() {
  HttpClientConfig config;
  const char* url = std::getenv("GEMBA_API_URL");
  if (url == nullptr || *url == '\0') {
    throw std::runtime_error(
        "GEMBA_API_URL is not set; export the chat-completion endpoint URL");
  }
  config.endpoint_url = url;
  if (const char* key = std::getenv("GEMBA_API_KEY")) config.api_key = key;
  return config;
}

HttpChatClient::HttpChatClient(HttpClientConfig config)
    : config_(std::move(config)) {
  static const std::regex url_pattern(R"(^(https?://[^/\s]+)(/.*)?$)",
                                      std::regex::icase);
  std::smatch match;
  if (!std::regex_match(config_.endpoint_url, match, url_pattern)) {
    throw std::invalid_argument("endpoint URL must be http(s)://host[:port]/path, got: " +
                                config_.endpoint_url);
  }
  host_base_ = match[1].str();
  path_ = match[2].matched && match[2].length() > 0 ? match[2].str() : "/";
  if (!config_.sleep_fn) {
    config_.sleep_fn = [](std::chrono::milliseconds delay) {
      std::this_thread::sleep_for(delay);
    };
  }
  rng_state_ = config_.jitter_seed != 0 ? config_.jitter_seed
                                        : std::random_device{}();
  if (config_.retry.max_attempts < 1) config_.retry.max_attempts = 1;
}

std::chrono::milliseconds HttpChatClient::backoff_delay(int attempt) {
  double cap = static_cast<double>(config_.retry.base_delay.count());
  for (int i = 1; i < attempt; ++i) cap *= config_.retry.backoff_factor;
  cap = std::min(cap, static_cast<double>(config_.retry.max_delay.count()));
  const auto cap_ms = static_cast<uint64_t>(cap);
  std::lock_guard lock(rng_mutex_);
  const uint64_t draw = splitmix64(rng_state_);
  return std::chrono::milliseconds(cap_ms == 0 ? 0 : draw % (cap_ms + 1));
}

CompletionResult HttpChatClient::complete(const CompletionRequest& request) {
  const std::string body = wire_body(request).dump();
  const auto start = std::chrono::steady_clock::now();

  for (int attempt = 1;; ++attempt) {
    httplib::Client client(host_base_);
    client.set_connection_timeout(config_.request_timeout);
    client.set_read_timeout(config_.request_timeout);
    client.set_write_timeout(config_.request_timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    auto response = client.Post(path_, headers, body, "application/json");

    std::optional<ClientError> retryable_error;
    std::optional<std::chrono::milliseconds> advised_delay;

    if (!response) {
      retryable_error = ClientError(ClientErrorKind::kTimeout,
                                    httplib::to_string(response.error()));
    } else if (response->status == 200) {
      nlohmann::json parsed =
          nlohmann::json::parse(response->body, nullptr, false);
      if (parsed.is_discarded()) {
        throw ClientError(ClientErrorKind::kMalformedResponse,
                          "response is not valid JSON");
      }
      if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
          parsed["choices"].empty()) {
        throw ClientError(ClientErrorKind::kMalformedResponse,
                          "response carries no choices");
      }
      const auto& first = parsed["choices"][0];
      if (first.value("finish_reason", "") == "content_filter") {
        throw ClientError(ClientErrorKind::kContentFiltered,
                          "completion stopped by content filter");
      }
      if (!first.contains("message") || !first["message"].contains("content") ||
          !first["message"]["content"].is_string()) {
        throw ClientError(ClientErrorKind::kMalformedResponse,
                          "first choice carries no message content");
      }
      CompletionResult result;
      result.text = first["message"]["content"].get<std::string>();
      result.from_cache = false;
      result.latency_ms = elapsed_ms_since(start);
      result.attempt_count = attempt;
      return result;
    } else if (response->status == 401 || response->status == 403) {
      throw ClientError(ClientErrorKind::kAuth,
                        "HTTP " + std::to_string(response->status));
    } else if (response->status == 429) {
      retryable_error = ClientError(ClientErrorKind::kRateLimited,
                                    "HTTP 429: " + response->body);
      if (response->has_header("Retry-After")) {
        const std::string advised = response->get_header_value("Retry-After");
        char* end = nullptr;
        const long seconds = std::strtol(advised.c_str(), &end, 10);
        if (end != advised.c_str() && seconds >= 0) {
          advised_delay = std::chrono::milliseconds(seconds * 1000);
        }
      }
    } else if (response->status >= 500) {
      retryable_error =
          ClientError(ClientErrorKind::kTimeout,
                      "HTTP " + std::to_string(response->status));
    } else if (response->status == 400 &&
               response->body.find("content_filter") != std::string::npos) {
      throw ClientError(ClientErrorKind::kContentFiltered,
                        "request rejected by content filter");
    } else {
      throw ClientError(ClientErrorKind::kMalformedResponse,
                        "unexpected HTTP status " +
                            std::to_string(response->status));
    }

    if (attempt >= config_.retry.max_attempts) throw *retryable_error;
    config_.sleep_fn(advised_delay ? *advised_delay : backoff_delay(attempt));
  }
}

}  // namespace gemba::llm
