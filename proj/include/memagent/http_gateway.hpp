#pragma once

#include <fstream>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "memagent/gateway.hpp"

namespace memagent {

// Reads an endpoint description; the API key comes from the environment
// variable named by "api_key_env" (default OPENAI_API_KEY).
EndpointConfig endpoint_from_json(const nlohmann::json& j);

// Chat-completions request body: one user message per conversation.
nlohmann::json build_chat_request(const EndpointConfig& config, const std::string& prompt,
                                  int max_output_tokens);

// Parses choices[0].message.content and, when present, per-token logprobs.
// Token ids are recovered from "token_id:<n>" token strings.
// Throws GatewayError carrying the raw body when the shape is wrong.
Completion parse_chat_response(const std::string& body);

class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(EndpointConfig config);

  std::string label() const override { return config_.model_name; }
  const EndpointConfig& config() const { return config_; }

 protected:
  Completion do_complete(const std::string& prompt, int max_output_tokens) override;

 private:
  void audit(const nlohmann::json& record);

  EndpointConfig config_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // e.g. /v1
  std::mutex audit_mu_;
  std::ofstream audit_;
};

}  // namespace memagent
