#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "memagent/http_gateway.hpp"
#include "memagent/jsonl.hpp"
#include "memagent/mock_gateway.hpp"
#include "memagent/parallel.hpp"
#include "memagent/templates.hpp"
#include "support.hpp"

using namespace memagent;

namespace {

const std::string kOkBody =
    R"({"choices":[{"message":{"role":"assistant","content":"hello \\boxed{42}"},)"
    R"("logprobs":{"content":[{"token":"token_id:5","logprob":-0.5},{"token":"token_id:9","logprob":-1.25}]}}]})";

// In-process chat endpoint on an ephemeral port.
class FakeServer {
 public:
  explicit FakeServer(std::function<void(const httplib::Request&, httplib::Response&, int)> handler)
      : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++requests_;
      {
        std::lock_guard lock(mu_);
        last_body_ = req.body;
        last_auth_ = req.get_header_value("Authorization");
      }
      handler_(req, res, n);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int requests() const { return requests_; }
  std::string last_body() {
    std::lock_guard lock(mu_);
    return last_body_;
  }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }

 private:
  std::function<void(const httplib::Request&, httplib::Response&, int)> handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
  std::mutex mu_;
  std::string last_body_, last_auth_;
};

EndpointConfig config_for(const std::string& url) {
  EndpointConfig c;
  c.base_url = url;
  c.model_name = "test-model";
  c.timeout_ms = 5000;
  c.retry.max_attempts = 3;
  c.retry.backoff_base_ms = 1;
  return c;
}

}  // namespace

TEST_CASE("endpoint config validation") {
  EndpointConfig c = config_for("http://localhost:1/v1");
  CHECK_NOTHROW(c.validate());
  c.max_in_flight = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = config_for("http://localhost:1/v1");
  c.timeout_ms = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("endpoint JSON takes the key from the environment only") {
  ::setenv("MEMAGENT_TEST_KEY", "sk-test", 1);
  const auto c = endpoint_from_json({{"base_url", "http://h/v1"},
                                     {"model", "m"},
                                     {"api_key_env", "MEMAGENT_TEST_KEY"},
                                     {"api_key", "from-file-ignored"},
                                     {"retry", {{"max_attempts", 5}}}});
  CHECK(c.api_key == "sk-test");
  CHECK(c.retry.max_attempts == 5);
  CHECK(c.model_name == "m");
}

TEST_CASE("chat request body") {
  auto c = config_for("http://h/v1");
  c.request_logprobs = true;
  const auto j = build_chat_request(c, "prompt text", 77);
  CHECK(j["model"] == "test-model");
  CHECK(j["messages"][0]["role"] == "user");
  CHECK(j["messages"][0]["content"] == "prompt text");
  CHECK(j["max_tokens"] == 77);
  CHECK(j["temperature"] == 0.7);
  CHECK(j["top_p"] == 0.95);
  CHECK(j["logprobs"] == true);
}

TEST_CASE("chat response parsing") {
  const auto c = parse_chat_response(kOkBody);
  CHECK(c.text == "hello \\boxed{42}");
  REQUIRE(c.logprobs);
  CHECK(*c.logprobs == std::vector<double>{-0.5, -1.25});
  REQUIRE(c.token_ids);
  CHECK(*c.token_ids == std::vector<long long>{5, 9});

  const auto plain = parse_chat_response(R"({"choices":[{"message":{"content":"x"}}]})");
  CHECK(plain.text == "x");
  CHECK(!plain.logprobs);

  try {
    parse_chat_response(R"({"error":"nope"})");
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.raw_body() == R"({"error":"nope"})");
  }
  CHECK_THROWS_AS(parse_chat_response("not json"), GatewayError);
}

TEST_CASE("http gateway round trip with bearer auth") {
  FakeServer srv([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(kOkBody, "application/json");
  });
  auto cfg = config_for(srv.url());
  cfg.api_key = "sk-abc";
  HttpGateway gw(cfg);
  const auto c = gw.complete("hi", 16);
  CHECK(c.text == "hello \\boxed{42}");
  CHECK(srv.last_auth() == "Bearer sk-abc");
  const auto body = nlohmann::json::parse(srv.last_body());
  CHECK(body["messages"][0]["content"] == "hi");
  CHECK(body["max_tokens"] == 16);
}

TEST_CASE("http gateway retries 5xx and 429 then succeeds") {
  FakeServer srv([](const httplib::Request&, httplib::Response& res, int n) {
    if (n == 1) res.status = 503;
    else if (n == 2) res.status = 429;
    else res.set_content(kOkBody, "application/json");
  });
  HttpGateway gw(config_for(srv.url()));
  CHECK(gw.complete("hi").text == "hello \\boxed{42}");
  CHECK(srv.requests() == 3);
}

TEST_CASE("http gateway gives up after max attempts") {
  FakeServer srv([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  HttpGateway gw(config_for(srv.url()));
  CHECK_THROWS_AS(gw.complete("hi"), GatewayError);
  CHECK(srv.requests() == 3);
}

TEST_CASE("http gateway does not retry client errors") {
  FakeServer srv([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 400;
    res.set_content(R"({"error":"bad request"})", "application/json");
  });
  HttpGateway gw(config_for(srv.url()));
  try {
    gw.complete("hi");
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.raw_body().find("bad request") != std::string::npos);
  }
  CHECK(srv.requests() == 1);
}

TEST_CASE("http gateway surfaces malformed bodies") {
  FakeServer srv([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  HttpGateway gw(config_for(srv.url()));
  CHECK_THROWS_AS(gw.complete("hi"), GatewayError);
}

TEST_CASE("http gateway reports unreachable endpoints") {
  auto cfg = config_for("http://127.0.0.1:1/v1");
  cfg.timeout_ms = 500;
  HttpGateway gw(cfg);
  CHECK_THROWS_AS(gw.complete("hi"), GatewayError);
}

TEST_CASE("http gateway audit log records each attempt") {
  TempDir dir("audit");
  FakeServer srv([](const httplib::Request&, httplib::Response& res, int n) {
    if (n == 1) res.status = 502;
    else res.set_content(kOkBody, "application/json");
  });
  auto cfg = config_for(srv.url());
  cfg.audit_log = dir / "audit.jsonl";
  {
    HttpGateway gw(cfg);
    gw.complete("hi");
  }
  std::size_t lines = 0;
  for_each_jsonl(dir / "audit.jsonl", [&](const nlohmann::json& j, std::size_t) {
    ++lines;
    CHECK(j.contains("request"));
    CHECK(j.contains("status"));
  });
  CHECK(lines == 2);
}

TEST_CASE("http gateway honours the in-flight bound") {
  std::atomic<int> live{0}, peak{0};
  FakeServer srv([&](const httplib::Request&, httplib::Response& res, int) {
    const int now = ++live;
    int p = peak;
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --live;
    res.set_content(kOkBody, "application/json");
  });
  auto cfg = config_for(srv.url());
  cfg.max_in_flight = 3;
  HttpGateway gw(cfg);
  parallel_for(24, 12, [&](std::size_t) { gw.complete("hi"); });
  CHECK(gw.peak_in_flight() <= 3);
  CHECK(peak.load() <= 3);
  CHECK(gw.call_count() == 24);
}

TEST_CASE("limiter stress: peak never exceeds the bound") {
  MockScript s = MockScript::parse("echo_memory");
  s.latency_us = 300;
  MockGateway gw(s, 4);
  const auto prompt = render_answer_prompt("q", "m");
  parallel_for(400, 32, [&](std::size_t) { gw.complete(prompt); });
  CHECK(gw.peak_in_flight() <= 4);
  CHECK(gw.peak_in_flight() >= 2);
  CHECK(gw.call_count() == 400);
}

TEST_CASE("mock output is a pure function of script and prompt") {
  const auto prompt = render_memory_prompt(
      "What is the special magic number for red-fox mentioned in the provided text?", kEmptyMemory,
      "noise. One of the special magic numbers for red-fox is: 1234567. One of the special magic numbers "
      "for blue-cat is: 7654321. more noise");
  for (const auto* spec : {"echo_memory", "perfect_extractor", "lossy:0.5", "k_hop_extractor"}) {
    const auto s = MockScript::parse(spec, 3);
    CHECK(mock_respond(s, prompt).text == mock_respond(s, prompt).text);
  }
  const auto perfect = mock_respond(MockScript::parse("perfect_extractor"), prompt).text;
  CHECK(perfect.find("1234567") != std::string::npos);
  CHECK(perfect.find("7654321") == std::string::npos);  // other key is not kept
  CHECK(mock_respond(MockScript::parse("echo_memory"), prompt).text == kEmptyMemory);
  CHECK(mock_respond(MockScript::parse("lossy:0"), prompt).text == perfect);
  CHECK(mock_respond(MockScript::parse("lossy:1"), prompt).text.find("1234567") == std::string::npos);
}

TEST_CASE("mock answers from memory") {
  const auto s = MockScript::parse("perfect_extractor");
  const auto q = "What is the special magic number for red-fox mentioned in the provided text?";
  const auto mem = mock_respond(s, render_memory_prompt(q, kEmptyMemory, "One of the special magic numbers for red-fox is: 1234567.")).text;
  CHECK(mock_respond(s, render_answer_prompt(q, mem)).text == "The answer is \\boxed{1234567}");
  CHECK(mock_respond(s, render_answer_prompt(q, kEmptyMemory)).text == "\\boxed{unknown}");
}

TEST_CASE("k-hop mock follows assignment chains") {
  const auto s = MockScript::parse("k_hop_extractor");
  const std::string q = "Find all variables that are assigned the value 12345 in the text above.";
  auto mem = mock_respond(s, render_memory_prompt(q, kEmptyMemory, "VAR AAAAA = 12345. noise VAR ZZZZZ = 99999.")).text;
  mem = mock_respond(s, render_memory_prompt(q, mem, "VAR BBBBB = AAAAA. VAR YYYYY = ZZZZZ.")).text;
  const auto ans = mock_respond(s, render_answer_prompt(q, mem)).text;
  CHECK(ans == "The answer is \\boxed{AAAAA, BBBBB}");
}

TEST_CASE("fixed_answer, replay and logprobs") {
  CHECK(mock_respond(MockScript::parse("fixed_answer:\\boxed{7}"), "anything").text == "\\boxed{7}");

  TempDir dir("replay");
  spit(dir / "trace.jsonl", R"({"prompt":"p1","completion":"c1"})" "\n");
  const auto r = MockScript::parse("replay:" + (dir / "trace.jsonl"));
  CHECK(mock_respond(r, "p1").text == "c1");
  CHECK_THROWS_AS(mock_respond(r, "p2"), GatewayError);

  auto s = MockScript::parse("fixed_answer:a b c");
  s.emit_logprobs = true;
  const auto c = mock_respond(s, "x");
  REQUIRE(c.logprobs);
  REQUIRE(c.token_ids);
  CHECK(c.logprobs->size() == 3);
  CHECK(c.token_ids->size() == 3);
  for (double lp : *c.logprobs) CHECK(lp < 0);
}

TEST_CASE("mock spec errors") {
  CHECK_THROWS_AS(MockScript::parse("oracle"), std::invalid_argument);
  CHECK_THROWS_AS(MockScript::parse("lossy:1.5"), std::invalid_argument);
}
