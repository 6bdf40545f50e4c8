#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "memagent/gateway.hpp"

namespace memagent {

enum class MockBehavior {
  echo_memory,        // returns the <memory> contents unchanged
  perfect_extractor,  // keeps every magic-number needle whose key is in the problem
  k_hop_extractor,    // follows VAR assignment chains from the queried value
  lossy,              // perfect_extractor that forgets each new needle with p_drop
  fixed_answer,       // always returns fixed_text
  replay,             // returns the completion recorded for an identical prompt
};

std::string to_string(MockBehavior behavior);

struct MockScript {
  MockBehavior behavior = MockBehavior::echo_memory;
  std::uint64_t seed = 0;
  double p_drop = 0.0;
  std::string fixed_text;
  std::map<std::string, std::string> replay;  // prompt -> completion
  bool emit_logprobs = false;
  int latency_us = 0;  // simulated service time; does not affect output

  // "echo_memory", "perfect_extractor", "k_hop_extractor", "lossy:<p>",
  // "fixed_answer:<text>", "replay:<trace.jsonl>".
  static MockScript parse(std::string_view spec, std::uint64_t seed = 0);
};

// Pure function of (script, prompt).
Completion mock_respond(const MockScript& script, std::string_view prompt);

class MockGateway : public Gateway {
 public:
  explicit MockGateway(MockScript script, int max_in_flight = 8)
      : Gateway(max_in_flight), script_(std::move(script)) {}

  const MockScript& script() const { return script_; }
  std::string label() const override { return "mock:" + to_string(script_.behavior); }

 protected:
  Completion do_complete(const std::string& prompt, int max_output_tokens) override;

 private:
  MockScript script_;
};

}  // namespace memagent
