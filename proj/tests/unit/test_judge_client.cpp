#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "empatheval/errors.hpp"
#include "empatheval/judge_client.hpp"
#include "empatheval/parallel.hpp"
#include "support/stub_judge.hpp"

using namespace empatheval;
namespace fs = std::filesystem;

namespace {

const std::string kSecret = "sk-test-SECRET-123";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("empatheval-judge-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

JudgeRequest request(const std::string& content, const std::string& version = "v1") {
  JudgeRequest r;
  r.model_name = "judge";
  r.messages = {{MessageRole::User, content}};
  r.prompt_version = version;
  return r;
}

JudgeClientConfig config(const stub::StubJudgeServer& server, const fs::path& cache) {
  JudgeClientConfig c;
  c.base_url = server.base_url();
  c.api_key = kSecret;
  c.cache_dir = cache;
  c.backoff_base = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(5);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cache key covers every request field") {
  const auto base = request("hello");
  const auto k = cache_key(base);
  CHECK(k.size() == 64);
  CHECK(cache_key(request("hello")) == k);
  CHECK(cache_key(request("hello!")) != k);
  CHECK(cache_key(request("hello", "v2")) != k);
  auto other = base;
  other.model_name = "judge-2";
  CHECK(cache_key(other) != k);
  other = base;
  other.temperature = 0.5;
  CHECK(cache_key(other) != k);
  other = base;
  other.max_tokens = 10;
  CHECK(cache_key(other) != k);
  other = base;
  other.messages[0].role = MessageRole::System;
  CHECK(cache_key(other) != k);
}

TEST_CASE("write-through cache and counters") {
  stub::StubJudgeServer server;
  TempDir tmp;
  JudgeClient client(config(server, tmp.path));

  const auto req = request("Assistant 1: fine\n\nAssistant 1: x");
  const auto first = client.complete(req);
  CHECK_FALSE(first.cached);
  CHECK(first.latency_ms.has_value());
  CHECK(client.network_calls() == 1);
  CHECK(server.calls() == 1);
  REQUIRE(server.auth_headers().size() == 1);
  CHECK(server.auth_headers()[0] == "Bearer " + kSecret);

  const auto second = client.complete(req);
  CHECK(second.cached);
  CHECK(second.text == first.text);
  CHECK(client.cache_hits() == 1);
  CHECK(server.calls() == 1);

  const auto file = ResponseCache(tmp.path).path_for(cache_key(req));
  REQUIRE(fs::exists(file));
  const auto stored = nlohmann::json::parse(slurp(file));
  CHECK(stored.at("key") == cache_key(req));
  CHECK(stored.at("response") == first.text);
  CHECK(stored.at("request").at("prompt_version") == "v1");
  CHECK(stored.contains("timestamp"));
  CHECK(slurp(file).find(kSecret) == std::string::npos);

  // A fresh client over the same directory answers from disk.
  JudgeClientConfig replay = config(server, tmp.path);
  replay.replay_only = true;
  JudgeClient offline(replay);
  CHECK(offline.complete(req).text == first.text);
  CHECK(server.calls() == 1);
}

TEST_CASE("replay mode never touches the network") {
  stub::StubJudgeServer server;
  TempDir tmp;
  auto c = config(server, tmp.path);
  c.replay_only = true;
  JudgeClient client(c);
  const auto req = request("cold");
  try {
    client.complete(req);
    FAIL("expected a cache miss");
  } catch (const CacheMissInReplayMode& e) {
    CHECK(e.key() == cache_key(req));
    CHECK(std::string(e.what()).find(cache_key(req)) != std::string::npos);
    CHECK(e.kind() == ErrorKind::Judge);
  }
  CHECK(server.calls() == 0);
}

TEST_CASE("missing endpoint") {
  TempDir tmp;
  JudgeClientConfig c;
  c.cache_dir = tmp.path;
  JudgeClient client(c);
  CHECK_THROWS_AS(client.complete(request("x")), BackendUnavailable);
}

TEST_CASE("auth failures are not retried") {
  stub::StubJudgeServer server;
  TempDir tmp;
  JudgeClient client(config(server, tmp.path));
  server.script({401});
  CHECK_THROWS_AS(client.complete(request("a")), AuthError);
  CHECK(server.calls() == 1);
  server.script({403});
  CHECK_THROWS_AS(client.complete(request("b")), AuthError);
  CHECK(server.calls() == 2);
}

TEST_CASE("429 then success is retried with backoff") {
  stub::StubJudgeServer server;
  TempDir tmp;
  JudgeClient client(config(server, tmp.path));
  server.script({429, 429});
  const auto r = client.complete(request("retry me"));
  CHECK_FALSE(r.cached);
  CHECK(server.calls() == 3);
  CHECK(client.http_attempts() == 3);
  CHECK(client.network_calls() == 1);
}

TEST_CASE("exhausted retries") {
  stub::StubJudgeServer server;
  TempDir tmp;
  JudgeClient client(config(server, tmp.path));

  server.script({429, 429, 429, 429});
  CHECK_THROWS_AS(client.complete(request("busy")), RateLimited);
  CHECK(server.calls() == 4);

  server.reset_counters();
  server.script({500, 502, 503, 500}, R"({"error":"boom, key was )" + kSecret + R"("})");
  try {
    client.complete(request("down"));
    FAIL("expected EndpointError");
  } catch (const EndpointError& e) {
    CHECK(std::string(e.what()).find(kSecret) == std::string::npos);
    CHECK(std::string(e.what()).find("500") != std::string::npos);
  }
  CHECK(server.calls() == 4);

  server.reset_counters();
  server.script({400});
  CHECK_THROWS_AS(client.complete(request("bad")), EndpointError);
  CHECK(server.calls() == 1);
}

TEST_CASE("connection failures surface as EndpointError") {
  TempDir tmp;
  JudgeClientConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.cache_dir = tmp.path;
  c.backoff_base = std::chrono::milliseconds(1);
  c.max_retries = 1;
  JudgeClient client(c);
  CHECK_THROWS_AS(client.complete(request("x")), EndpointError);
  CHECK(client.http_attempts() == 2);
}

TEST_CASE("parallelism caps requests in flight") {
  stub::StubJudgeServer server(std::chrono::milliseconds(40));
  TempDir tmp;
  auto c = config(server, tmp.path);
  c.parallelism = 3;
  JudgeClient client(c);
  parallel_for(12, 12, [&](std::size_t i) { client.complete(request("req " + std::to_string(i))); });
  CHECK(server.calls() == 12);
  CHECK(server.max_in_flight() <= 3);
  CHECK(server.max_in_flight() >= 2);
}

TEST_CASE("response body parsing") {
  CHECK(extract_completion_text(R"({"choices":[{"message":{"content":"yes"}}]})") == "yes");
  CHECK(extract_completion_text(R"({"choices":[{"message":{"content":null}}]})").empty());
  CHECK_THROWS_AS(extract_completion_text("not json"), EndpointError);
  CHECK_THROWS_AS(extract_completion_text(R"({"choices":[]})"), EndpointError);
  const auto body = nlohmann::json::parse(chat_completions_body(request("hi")));
  CHECK(body.at("model") == "judge");
  CHECK(body.at("messages")[0].at("role") == "user");
  CHECK_FALSE(body.contains("prompt_version"));
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  std::vector<int> out(20, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) * 2);
  try {
    parallel_for(10, 4, [](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error("fail " + std::to_string(i));
    });
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "fail 3");
  }
}
