#pragma once

// In-process OpenAI-compatible chat server for tests. Answers are derived
// from a hash of the prompt, so they are stable across runs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "empatheval/text.hpp"

namespace stub {

inline std::string answer_for(const std::string& prompt) {
  const auto h = empatheval::fnv1a64(prompt);
  static const char* levels[] = {"no", "weak", "strong"};

  static const std::regex per_dim(R"(\[template structural-v1/(\w+)\])");
  std::smatch m;
  if (std::regex_search(prompt, m, per_dim)) return levels[h % 3];
  if (prompt.find("[template structural-v1]") != std::string::npos) {
    return std::string("emotional_reaction: ") + levels[h % 3] + "\ninterpretation: " + levels[(h >> 8) % 3] +
           "\nexploration: " + levels[(h >> 16) % 3];
  }
  static const std::regex assistant(R"(\nAssistant (\d+): )");
  std::size_t n = 0;
  for (std::sregex_iterator it(prompt.begin(), prompt.end(), assistant), end; it != end; ++it)
    n = std::max<std::size_t>(n, std::stoul((*it)[1].str()));
  if (n == 0) return "ok";
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += '\n';
    out += "Assistant " + std::to_string(i + 1) + ": " + (((h >> i) & 1) ? "yes" : "no");
  }
  return out;
}

class StubJudgeServer {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;

  explicit StubJudgeServer(std::chrono::milliseconds delay = std::chrono::milliseconds(0)) : delay_(delay) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      {
        std::lock_guard lock(mu_);
        max_in_flight_ = std::max(max_in_flight_, now);
        auth_headers_.push_back(req.get_header_value("Authorization"));
        bodies_.push_back(req.body);
      }
      ++calls_;
      if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

      int status = 200;
      {
        std::lock_guard lock(mu_);
        if (!script_.empty()) {
          status = script_.front();
          script_.pop_front();
        }
      }
      --in_flight_;
      if (status != 200) {
        res.status = status;
        res.set_content(error_body_, "application/json");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      std::string prompt;
      for (const auto& msg : body.at("messages")) prompt += msg.at("content").get<std::string>() + "\n";
      Responder responder;
      {
        std::lock_guard lock(mu_);
        responder = responder_;
      }
      const auto text = responder ? responder(prompt) : answer_for(prompt);
      nlohmann::json reply{{"id", "stub"},
                           {"object", "chat.completion"},
                           {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubJudgeServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_.load(); }
  int max_in_flight() const {
    std::lock_guard lock(mu_);
    return max_in_flight_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mu_);
    return auth_headers_;
  }

  /// Statuses returned to the next requests, in order, before normal answers resume.
  void script(std::vector<int> statuses, std::string error_body = R"({"error":"scripted"})") {
    std::lock_guard lock(mu_);
    script_.assign(statuses.begin(), statuses.end());
    error_body_ = std::move(error_body);
  }
  void respond_with(Responder r) {
    std::lock_guard lock(mu_);
    responder_ = std::move(r);
  }
  void reset_counters() {
    std::lock_guard lock(mu_);
    calls_ = 0;
    max_in_flight_ = 0;
    auth_headers_.clear();
    bodies_.clear();
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::chrono::milliseconds delay_;
  mutable std::mutex mu_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  int max_in_flight_ = 0;
  std::deque<int> script_;
  std::string error_body_;
  std::vector<std::string> auth_headers_;
  std::vector<std::string> bodies_;
  Responder responder_;
};

}  // namespace stub
