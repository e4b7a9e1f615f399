#include "empatheval/judge_client.hpp"

#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>
#include <thread>

#include <httplib.h>
#include <unistd.h>

#include <json.hpp>

#include "empatheval/errors.hpp"
#include "empatheval/text.hpp"

namespace empatheval {

using json = nlohmann::json;

namespace {

std::string_view role_name(MessageRole role) { return role == MessageRole::System ? "system" : "user"; }

json messages_json(const JudgeRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  return messages;
}

json request_echo(const JudgeRequest& request) {
  return json{{"model", request.model_name},
              {"messages", messages_json(request)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens},
              {"prompt_version", request.prompt_version}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string scrub(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos))
    text.replace(pos, secret.size(), "[redacted]");
  return text;
}

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_base_url(std::string url) {
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, path_start), url.substr(path_start) + "/v1/chat/completions"};
}

std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, int retry) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto delay = base.count() * (std::int64_t{1} << retry);
  std::uniform_int_distribution<std::int64_t> jitter(0, delay / 10);
  return std::chrono::milliseconds(delay + jitter(rng));
}

}  // namespace

std::string cache_key(const JudgeRequest& request) { return sha256_hex(request_echo(request).dump()); }

std::string chat_completions_body(const JudgeRequest& request) {
  return json{{"model", request.model_name},
              {"messages", messages_json(request)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}}
      .dump();
}

std::string extract_completion_text(std::string_view response_body) {
  json body;
  try {
    body = json::parse(response_body);
  } catch (const json::parse_error&) {
    throw EndpointError(200, "response is not JSON: " + std::string(response_body));
  }
  const auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty())
    throw EndpointError(200, "response has no choices");
  const auto& choice = (*choices)[0];
  if (!choice.contains("message") || !choice["message"].is_object())
    throw EndpointError(200, "choice 0 has no message");
  const auto& content = choice["message"].value("content", json());
  if (content.is_null()) return {};
  if (!content.is_string()) throw EndpointError(200, "message content is not a string");
  return content.get<std::string>();
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::load(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const auto entry = json::parse(in);
    return entry.at("response").get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable entries count as misses and get rewritten
  }
}

void ResponseCache::store(const std::string& key, const JudgeRequest& request, const std::string& text) const {
  const auto target = path_for(key);
  std::filesystem::create_directories(target.parent_path());
  static std::atomic<std::uint64_t> counter{0};
  const auto tmp = target.parent_path() / (key + ".tmp." + std::to_string(::getpid()) + "." +
                                           std::to_string(counter.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << json{{"key", key}, {"request", request_echo(request)}, {"response", text}, {"timestamp", utc_timestamp()}}
               .dump(2)
        << '\n';
    if (!out) throw std::runtime_error("cannot write cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

// ---------------------------------------------------------------------------

JudgeClient::JudgeClient(JudgeClientConfig config)
    : config_(std::move(config)),
      cache_(config_.cache_dir),
      in_flight_(std::make_unique<std::counting_semaphore<>>(
          static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.parallelism)))) {
  config_.parallelism = std::max<std::size_t>(1, config_.parallelism);
}

JudgeClient::~JudgeClient() = default;

JudgeResponse JudgeClient::complete(const JudgeRequest& request) {
  const auto key = cache_key(request);
  if (auto text = cache_.load(key)) {
    ++cache_hits_;
    return {std::move(*text), true, std::nullopt};
  }
  if (config_.replay_only) throw CacheMissInReplayMode(key);
  if (config_.base_url.empty()) throw BackendUnavailable("no judge endpoint configured (set EMPATHEVAL_BASE_URL)");

  ++network_calls_;
  const auto start = std::chrono::steady_clock::now();
  auto text = post_with_retries(request);
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  cache_.store(key, request, text);
  return {std::move(text), false, elapsed};
}

std::string JudgeClient::post_with_retries(const JudgeRequest& request) {
  const auto endpoint = split_base_url(config_.base_url);
  const auto body = chat_completions_body(request);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  for (int attempt = 0;; ++attempt) {
    int status = 0;
    std::string response_body;
    {
      in_flight_->acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{*in_flight_};

      ++http_attempts_;
      httplib::Client client(endpoint.scheme_host_port);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      auto result = client.Post(endpoint.path, headers, body, "application/json");
      if (result) {
        status = result->status;
        response_body = result->body;
      } else {
        response_body = "connection failed: " + httplib::to_string(result.error());
      }
    }

    if (status >= 200 && status < 300) return extract_completion_text(response_body);
    if (status == 401 || status == 403) throw AuthError(status);

    const bool retryable = status == 0 || status == 429 || status >= 500;
    if (!retryable) throw EndpointError(status, scrub(response_body, config_.api_key));
    if (attempt >= config_.max_retries) {
      if (status == 429) throw RateLimited(attempt + 1);
      throw EndpointError(status, scrub(response_body, config_.api_key));
    }
    std::this_thread::sleep_for(backoff_delay(config_.backoff_base, attempt));
  }
}

}  // namespace empatheval
