#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memagent {

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_base_ms = 500;  // delay before retry n is base * 2^(n-1)
};

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.95;
  int max_output_tokens = 1024;
};

struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model_name;
  std::string api_key;   // populated from the environment, never from files
  std::string api_key_env = "OPENAI_API_KEY";
  int max_in_flight = 8;
  int timeout_ms = 120000;
  RetryPolicy retry;
  SamplingParams sampling;
  bool request_logprobs = false;
  std::string audit_log;  // optional JSONL path for request/response pairs

  void validate() const;
};

struct Completion {
  std::string text;
  std::optional<std::vector<long long>> token_ids;
  std::optional<std::vector<double>> logprobs;  // nats
  double latency_ms = 0.0;
};

// Transport or protocol failure that survived the retry policy.
class GatewayError : public std::runtime_error {
 public:
  GatewayError(const std::string& what, std::string raw_body = {})
      : std::runtime_error(what), raw_body_(std::move(raw_body)) {}
  const std::string& raw_body() const { return raw_body_; }

 private:
  std::string raw_body_;
};

// Counting gate bounding concurrent requests; also tracks the peak, which the
// stress tests assert on.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit);

  void acquire();
  void release();

  int limit() const { return limit_; }
  int current() const;
  int peak() const;

 private:
  const int limit_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int current_ = 0;
  int peak_ = 0;
};

// A chat-completion backend. complete() is thread-safe and never lets more
// than max_in_flight() requests run at once.
class Gateway {
 public:
  explicit Gateway(int max_in_flight) : limiter_(max_in_flight) {}
  virtual ~Gateway() = default;
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  Completion complete(const std::string& prompt, int max_output_tokens = 0);

  int max_in_flight() const { return limiter_.limit(); }
  int peak_in_flight() const { return limiter_.peak(); }
  std::size_t call_count() const;
  virtual std::string label() const = 0;

 protected:
  virtual Completion do_complete(const std::string& prompt, int max_output_tokens) = 0;

 private:
  InFlightLimiter limiter_;
  mutable std::mutex stats_mu_;
  std::size_t calls_ = 0;
};

}  // namespace memagent
