#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memagent/workflow.hpp"

namespace memagent {

// One JSON object per conversation: sample_id, rollout_index, turn_index,
// kind, prompt, completion, token_ids?, logprobs?, memory_after?, warnings.
// Wall-clock timings are deliberately left out so that trace files hash
// identically across reruns; see timing_lines().
std::vector<nlohmann::json> trace_to_json_lines(const EpisodeTrace& trace);

// Inverse of one line of trace_to_json_lines (trace-level keys are ignored).
ConversationRecord conversation_from_json(const nlohmann::json& j);

// Writes every conversation line of `trace` followed by a newline.
void write_trace(std::ostream& out, const EpisodeTrace& trace);

// Per-conversation wall clock, for the separate timings file.
std::vector<nlohmann::json> timing_lines(const EpisodeTrace& trace);

// Groups conversation lines back into traces, in order of first appearance.
// A torn (unparseable) final line is ignored; malformed lines elsewhere are
// errors naming the line. Groups without an answer conversation come back
// with `error` set.
std::vector<EpisodeTrace> read_traces(const std::string& path);

}  // namespace memagent
