#include "memagent/trace_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

#include "memagent/jsonl.hpp"

namespace memagent {

std::vector<nlohmann::json> trace_to_json_lines(const EpisodeTrace& trace) {
  std::vector<nlohmann::json> lines;
  for (std::size_t j = 0; j < trace.conversations.size(); ++j) {
    const auto& c = trace.conversations[j];
    nlohmann::json line{
        {"sample_id", trace.sample_id},
        {"rollout_index", trace.rollout_index},
        {"turn_index", j},
        {"kind", to_string(c.kind)},
        {"prompt", c.prompt},
        {"completion", c.completion},
        {"prompt_tokens", c.prompt_tokens},
    };
    if (c.completion_token_ids) line["token_ids"] = *c.completion_token_ids;
    if (c.completion_logprobs) line["logprobs"] = *c.completion_logprobs;
    if (c.memory_after) {
      line["memory_after"] = {{"text", c.memory_after->text},
                              {"token_count", c.memory_after->token_count},
                              {"capacity", c.memory_after->capacity},
                              {"truncated", c.memory_after->truncated}};
    }
    if (!c.warnings.empty()) line["warnings"] = c.warnings;
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_trace(std::ostream& out, const EpisodeTrace& trace) {
  for (const auto& line : trace_to_json_lines(trace)) out << jsonl_dump(line) << '\n';
}

std::vector<nlohmann::json> timing_lines(const EpisodeTrace& trace) {
  std::vector<nlohmann::json> lines;
  for (std::size_t j = 0; j < trace.conversations.size(); ++j) {
    lines.push_back({{"sample_id", trace.sample_id},
                     {"rollout_index", trace.rollout_index},
                     {"turn_index", j},
                     {"wall_clock_ms", trace.conversations[j].wall_clock_ms}});
  }
  return lines;
}

ConversationRecord conversation_from_json(const nlohmann::json& j) {
  ConversationRecord c;
  c.kind = conversation_kind_from_string(j.at("kind").get<std::string>());
  c.prompt = j.at("prompt").get<std::string>();
  c.completion = j.at("completion").get<std::string>();
  c.prompt_tokens = j.value("prompt_tokens", std::size_t{0});
  if (j.contains("token_ids")) c.completion_token_ids = j["token_ids"].get<std::vector<long long>>();
  if (j.contains("logprobs")) c.completion_logprobs = j["logprobs"].get<std::vector<double>>();
  if (c.completion_token_ids && c.completion_logprobs &&
      c.completion_token_ids->size() != c.completion_logprobs->size())
    throw std::runtime_error("token_ids and logprobs differ in length");
  if (j.contains("memory_after")) {
    const auto& m = j["memory_after"];
    MemoryState s;
    s.text = m.at("text").get<std::string>();
    s.token_count = m.at("token_count").get<std::size_t>();
    s.capacity = m.at("capacity").get<std::size_t>();
    s.truncated = m.at("truncated").get<bool>();
    c.memory_after = std::move(s);
  }
  if (j.contains("warnings")) c.warnings = j["warnings"].get<std::vector<std::string>>();
  return c;
}

std::vector<EpisodeTrace> read_traces(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> raw;
  for (std::string line; std::getline(in, line);) raw.push_back(std::move(line));

  std::vector<EpisodeTrace> traces;
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::vector<std::map<std::size_t, ConversationRecord>> turns;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(raw[i], nullptr, false);
    if (j.is_discarded()) {
      if (i + 1 == raw.size()) break;  // torn write at the end of an interrupted run
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": malformed JSON");
    }
    try {
      const auto key = std::make_pair(j.at("sample_id").get<std::string>(),
                                      j.value("rollout_index", 0));
      auto [it, fresh] = index.emplace(key, traces.size());
      if (fresh) {
        EpisodeTrace t;
        t.sample_id = key.first;
        t.rollout_index = key.second;
        traces.push_back(std::move(t));
        turns.emplace_back();
      }
      turns[it->second][j.at("turn_index").get<std::size_t>()] = conversation_from_json(j);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }

  for (std::size_t t = 0; t < traces.size(); ++t) {
    auto& trace = traces[t];
    std::size_t expected = 0;
    for (auto& [turn, rec] : turns[t]) {
      if (turn != expected++) {
        trace.error = "missing turn " + std::to_string(expected - 1);
        break;
      }
      trace.conversations.push_back(std::move(rec));
    }
    if (!trace.error) {
      if (trace.conversations.empty() ||
          trace.conversations.back().kind != ConversationKind::answer)
        trace.error = "trace has no answer conversation";
      else
        trace.final_answer = trace.conversations.back().completion;
    }
  }
  return traces;
}

}  // namespace memagent
