#include "memagent/gateway.hpp"

namespace memagent {

void EndpointConfig::validate() const {
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be > 0");
  if (retry.max_attempts < 1) throw std::invalid_argument("retry.max_attempts must be >= 1");
  if (base_url.empty()) throw std::invalid_argument("base_url is required");
}

InFlightLimiter::InFlightLimiter(int limit) : limit_(limit) {
  if (limit < 1) throw std::invalid_argument("max_in_flight must be >= 1");
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return current_ < limit_; });
  ++current_;
  if (current_ > peak_) peak_ = current_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --current_;
  }
  cv_.notify_one();
}

int InFlightLimiter::current() const {
  std::lock_guard lock(mu_);
  return current_;
}

int InFlightLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

Completion Gateway::complete(const std::string& prompt, int max_output_tokens) {
  limiter_.acquire();
  struct Release {
    InFlightLimiter& l;
    ~Release() { l.release(); }
  } release{limiter_};
  {
    std::lock_guard lock(stats_mu_);
    ++calls_;
  }
  const auto start = std::chrono::steady_clock::now();
  Completion out = do_complete(prompt, max_output_tokens);
  out.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::size_t Gateway::call_count() const {
  std::lock_guard lock(stats_mu_);
  return calls_;
}

}  // namespace memagent
