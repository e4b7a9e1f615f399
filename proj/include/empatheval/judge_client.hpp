#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace empatheval {

enum class MessageRole { System, User };

struct ChatMessage {
  MessageRole role = MessageRole::User;
  std::string content;
};

struct JudgeRequest {
  std::string model_name;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 256;
  std::string prompt_version;
};

struct JudgeResponse {
  std::string text;
  bool cached = false;
  std::optional<std::int64_t> latency_ms;
};

/// SHA-256 (lowercase hex) over a canonical JSON encoding of model name,
/// message roles and contents, temperature, max_tokens and prompt version.
std::string cache_key(const JudgeRequest& request);

/// Anything that can answer a judge request. The evaluation modules only see
/// this interface, so tests can script a judge without a network.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeResponse complete(const JudgeRequest& request) = 0;
  /// Upper bound on useful concurrent callers.
  virtual std::size_t parallelism() const { return 1; }
};

/// Content-addressed response cache: one JSON file per key holding the
/// request echo, the response text and a timestamp. Writes go to a temporary
/// file first and are renamed into place.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> load(const std::string& key) const;
  void store(const std::string& key, const JudgeRequest& request, const std::string& text) const;
  std::filesystem::path path_for(const std::string& key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct JudgeClientConfig {
  /// Endpoint root; requests go to {base_url}/v1/chat/completions.
  std::string base_url;
  /// Bearer token. Never logged, cached or echoed in errors.
  std::string api_key;
  std::filesystem::path cache_dir = ".empatheval-cache";
  bool replay_only = false;
  std::size_t parallelism = 4;
  /// Retries after the first attempt for 429, 5xx and connection failures.
  int max_retries = 3;
  /// Delay before retry k (0-based) is backoff_base * 2^k plus up to 10% jitter.
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::seconds timeout{120};
};

/// Chat-completions client with a write-through disk cache and retries.
/// Safe to share between threads; at most `parallelism` requests are in
/// flight at any moment.
class JudgeClient final : public Judge {
 public:
  explicit JudgeClient(JudgeClientConfig config);
  ~JudgeClient() override;

  JudgeResponse complete(const JudgeRequest& request) override;
  std::size_t parallelism() const override { return config_.parallelism; }

  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
  /// Requests that needed the network (one per cache miss, retries excluded).
  std::size_t network_calls() const noexcept { return network_calls_.load(); }
  /// HTTP attempts including retries.
  std::size_t http_attempts() const noexcept { return http_attempts_.load(); }

  const JudgeClientConfig& config() const noexcept { return config_; }

 private:
  std::string post_with_retries(const JudgeRequest& request);

  JudgeClientConfig config_;
  ResponseCache cache_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> http_attempts_{0};
};

/// Request body for the chat-completions endpoint.
std::string chat_completions_body(const JudgeRequest& request);

/// Content of choice 0's message; throws EndpointError when the shape is wrong.
std::string extract_completion_text(std::string_view response_body);

}  // namespace empatheval
