#pragma once

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <unistd.h>

namespace gemba::test {

class TempDir {
 public:
  TempDir() {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gemba-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Well-formed chat-completion response body.
inline std::string chat_response_json(const std::string& content,
                                      const std::string& finish_reason = "stop") {
  nlohmann::json message{{"role", "assistant"}, {"content", content}};
  nlohmann::json choice{{"message", message}, {"finish_reason", finish_reason}};
  nlohmann::json body;
  body["choices"] = nlohmann::json::array({choice});
  return body.dump();
}

// Local scripted chat endpoint. The handler decides each response; the
// endpoint records bodies, the call count, and the peak number of handlers
// running at once.
class FakeEndpoint {
 public:
  using Handler = std::function<void(const httplib::Request&,
                                     httplib::Response&, int call_index)>;

  explicit FakeEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      const int index = call_count_.fetch_add(1);
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(req.body);
      }
      const int current = in_flight_.fetch_add(1) + 1;
      int expected = max_in_flight_.load();
      while (current > expected &&
             !max_in_flight_.compare_exchange_weak(expected, current)) {
      }
      handler_(req, res, index);
      in_flight_.fetch_sub(1);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int call_count() const { return call_count_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> call_count_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  mutable std::mutex mutex_;
  std::vector<std::string> bodies_;
};

}  // namespace gemba::test
