#include "memagent/trajectory.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "memagent/jsonl.hpp"
#include "memagent/trace_io.hpp"

namespace memagent {
namespace {

bool same_memory(const std::optional<MemoryState>& a, const std::optional<MemoryState>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->text == b->text && a->token_count == b->token_count && a->capacity == b->capacity &&
         a->truncated == b->truncated;
}

bool same_conversation(const ConversationRecord& a, const ConversationRecord& b) {
  return a.kind == b.kind && a.prompt == b.prompt && a.completion == b.completion &&
         a.completion_token_ids == b.completion_token_ids &&
         a.completion_logprobs == b.completion_logprobs && same_memory(a.memory_after, b.memory_after) &&
         a.prompt_tokens == b.prompt_tokens && a.warnings == b.warnings;
}

}  // namespace

bool ScoredEpisode::operator==(const ScoredEpisode& o) const {
  if (group_id != o.group_id || reward != o.reward || advantage != o.advantage) return false;
  if (trace.sample_id != o.trace.sample_id || trace.rollout_index != o.trace.rollout_index ||
      trace.final_answer != o.trace.final_answer || trace.error != o.trace.error ||
      trace.conversations.size() != o.trace.conversations.size())
    return false;
  for (std::size_t j = 0; j < trace.conversations.size(); ++j)
    if (!same_conversation(trace.conversations[j], o.trace.conversations[j])) return false;
  return true;
}

std::vector<ScoredEpisode> score_episodes(const std::vector<EpisodeTrace>& traces,
                                          const std::vector<std::optional<double>>& rewards,
                                          const DapoConfig& config) {
  if (rewards.size() != traces.size()) throw std::invalid_argument("one reward per trace required");
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (!rewards[i]) {
      throw std::invalid_argument("trace " + traces[i].sample_id + " rollout " +
                                  std::to_string(traces[i].rollout_index) + " is not scored");
    }
    if (!traces[i].complete()) {
      throw std::invalid_argument("trace " + traces[i].sample_id + " rollout " +
                                  std::to_string(traces[i].rollout_index) + " is incomplete");
    }
    auto& g = groups[traces[i].sample_id];
    if (g.empty()) order.push_back(traces[i].sample_id);
    g.push_back(i);
  }

  std::vector<ScoredEpisode> out;
  out.reserve(traces.size());
  for (const auto& id : order) {
    auto idx = groups[id];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return traces[a].rollout_index < traces[b].rollout_index;
    });
    std::vector<double> r;
    for (auto i : idx) r.push_back(*rewards[i]);
    AdvantageTable adv;
    if (r.size() < 2) {
      adv.episode.assign(r.size(), 0.0);  // a lone rollout has no group baseline
    } else {
      DapoConfig c = config;
      c.group_size = r.size();
      adv = compute_advantages(r, c);
    }
    for (std::size_t k = 0; k < idx.size(); ++k)
      out.push_back({id, traces[idx[k]], r[k], adv.episode[k]});
  }
  return out;
}

void export_trajectories(const std::string& path, const std::vector<ScoredEpisode>& episodes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& ep : episodes) {
    if (!ep.trace.complete()) throw std::invalid_argument("cannot export incomplete trace " + ep.trace.sample_id);
    const auto lines = trace_to_json_lines(ep.trace);
    for (auto line : lines) {
      line["group_id"] = ep.group_id;
      line["conv_index"] = line["turn_index"];
      line["n_conversations"] = lines.size();
      line["reward"] = ep.reward;
      line["advantage"] = ep.advantage;
      out << jsonl_dump(line) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ScoredEpisode> import_trajectories(const std::string& path) {
  std::vector<ScoredEpisode> out;
  for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
    const auto conv_index = j.at("conv_index").get<std::size_t>();
    const auto sample_id = j.at("sample_id").get<std::string>();
    const auto rollout = j.at("rollout_index").get<int>();
    if (conv_index == 0) {
      ScoredEpisode ep;
      ep.group_id = j.at("group_id").get<std::string>();
      ep.trace.sample_id = sample_id;
      ep.trace.rollout_index = rollout;
      ep.reward = j.at("reward").get<double>();
      ep.advantage = j.at("advantage").get<double>();
      out.push_back(std::move(ep));
    }
    if (out.empty()) throw std::runtime_error("record does not start an episode");
    auto& ep = out.back();
    if (ep.trace.sample_id != sample_id || ep.trace.rollout_index != rollout ||
        ep.trace.conversations.size() != conv_index)
      throw std::runtime_error("records of an episode are out of order");
    if (j.at("advantage").get<double>() != ep.advantage || j.at("reward").get<double>() != ep.reward)
      throw std::runtime_error("advantage differs between conversations of one episode");
    ep.trace.conversations.push_back(conversation_from_json(j));
    if (ep.trace.conversations.back().kind == ConversationKind::answer)
      ep.trace.final_answer = ep.trace.conversations.back().completion;
  });
  return out;
}

}  // namespace memagent
