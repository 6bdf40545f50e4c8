#include "memagent/http_gateway.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "memagent/jsonl.hpp"

namespace memagent {
namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

void split_url(const std::string& url, std::string& origin, std::string& prefix) {
  const auto scheme_end = url.find("://");
  const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  origin = path_begin == std::string::npos ? url : url.substr(0, path_begin);
  prefix = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
}

}  // namespace

EndpointConfig endpoint_from_json(const nlohmann::json& j) {
  EndpointConfig c;
  c.base_url = j.at("base_url").get<std::string>();
  c.model_name = j.value("model", std::string{});
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (const char* key = std::getenv(c.api_key_env.c_str())) c.api_key = key;
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.backoff_base_ms = r.value("backoff_base_ms", c.retry.backoff_base_ms);
  }
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    c.sampling.temperature = s.value("temperature", c.sampling.temperature);
    c.sampling.top_p = s.value("top_p", c.sampling.top_p);
    c.sampling.max_output_tokens = s.value("max_output_tokens", c.sampling.max_output_tokens);
  }
  c.request_logprobs = j.value("logprobs", c.request_logprobs);
  c.audit_log = j.value("audit_log", std::string{});
  c.validate();
  return c;
}

nlohmann::json build_chat_request(const EndpointConfig& config, const std::string& prompt,
                                  int max_output_tokens) {
  nlohmann::json req{
      {"model", config.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config.sampling.temperature},
      {"top_p", config.sampling.top_p},
      {"max_tokens", max_output_tokens > 0 ? max_output_tokens : config.sampling.max_output_tokens},
      {"stream", false},
  };
  if (config.request_logprobs) req["logprobs"] = true;
  return req;
}

Completion parse_chat_response(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw GatewayError("malformed response: not JSON", body);
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
    throw GatewayError("malformed response: missing choices", body);
  const auto& choice = j["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string())
    throw GatewayError("malformed response: missing message content", body);

  Completion c;
  c.text = choice["message"]["content"].get<std::string>();
  if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
      choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
    std::vector<double> lps;
    std::vector<long long> ids;
    bool have_ids = true;
    for (const auto& tok : choice["logprobs"]["content"]) {
      if (!tok.contains("logprob") || !tok["logprob"].is_number())
        throw GatewayError("malformed response: token without logprob", body);
      lps.push_back(tok["logprob"].get<double>());
      const auto token = tok.value("token", std::string{});
      if (have_ids && token.rfind("token_id:", 0) == 0) {
        ids.push_back(std::stoll(token.substr(9)));
      } else {
        have_ids = false;
      }
    }
    c.logprobs = std::move(lps);
    if (have_ids && !ids.empty()) c.token_ids = std::move(ids);
  }
  return c;
}

HttpGateway::HttpGateway(EndpointConfig config)
    : Gateway(config.max_in_flight), config_(std::move(config)) {
  config_.validate();
  split_url(config_.base_url, origin_, path_prefix_);
  if (!config_.audit_log.empty()) {
    audit_.open(config_.audit_log, std::ios::app);
    if (!audit_) throw std::runtime_error("cannot open audit log: " + config_.audit_log);
  }
}

void HttpGateway::audit(const nlohmann::json& record) {
  if (!audit_.is_open()) return;
  std::lock_guard lock(audit_mu_);
  audit_ << jsonl_dump(record) << '\n';
  audit_.flush();
}

Completion HttpGateway::do_complete(const std::string& prompt, int max_output_tokens) {
  const auto request = build_chat_request(config_, prompt, max_output_tokens);
  const auto body = jsonl_dump(request);
  const auto path = path_prefix_ + "/chat/completions";

  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      const auto delay = static_cast<long long>(config_.retry.backoff_base_ms) << (attempt - 2);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    httplib::Client client(origin_);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      audit({{"attempt", attempt}, {"request", request}, {"error", last_error}});
      continue;
    }
    audit({{"attempt", attempt}, {"request", request}, {"status", res->status}, {"response", res->body}});
    if (res->status >= 200 && res->status < 300) return parse_chat_response(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) throw GatewayError(last_error, res->body);
  }
  throw GatewayError("giving up after " + std::to_string(config_.retry.max_attempts) +
                     " attempts: " + last_error);
}

}  // namespace memagent
