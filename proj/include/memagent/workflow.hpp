#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memagent/gateway.hpp"
#include "memagent/task.hpp"
#include "memagent/templates.hpp"
#include "memagent/token_counter.hpp"

namespace memagent {

// Document split into K = ceil(c / N) consecutive chunks of at most N tokens.
struct ChunkPlan {
  std::vector<std::string> chunk_texts;
  std::vector<std::size_t> chunk_token_counts;
  std::size_t budget = 5000;
  std::size_t total_tokens = 0;

  std::size_t size() const { return chunk_texts.size(); }
};

// Greedy left-to-right packing at token boundaries: every chunk except the
// last holds exactly `budget` tokens. With the whitespace counter every token
// boundary is a whitespace boundary.
ChunkPlan chunk_document(std::string_view text, std::size_t budget, const TokenCounter& counter);

enum class ConversationKind { memory_update, answer };

std::string to_string(ConversationKind kind);
ConversationKind conversation_kind_from_string(std::string_view name);

struct ConversationRecord {
  ConversationKind kind = ConversationKind::memory_update;
  std::string prompt;
  std::string completion;
  std::optional<std::vector<long long>> completion_token_ids;
  std::optional<std::vector<double>> completion_logprobs;
  std::optional<MemoryState> memory_after;  // set for memory_update records
  std::size_t prompt_tokens = 0;
  double wall_clock_ms = 0.0;
  std::vector<std::string> warnings;
};

// K memory-update conversations followed by one answer conversation.
struct EpisodeTrace {
  std::string sample_id;
  int rollout_index = 0;
  std::vector<ConversationRecord> conversations;
  std::string final_answer;
  std::optional<std::string> error;  // set when the episode was aborted

  bool complete() const {
    return !error && !conversations.empty() &&
           conversations.back().kind == ConversationKind::answer;
  }
};

struct Budgets {
  std::size_t query = 1024;
  std::size_t chunk = 5000;
  std::size_t memory = 1024;
  std::size_t output = 1024;
};

// Largest prompt the workflow may render under `budgets`.
std::size_t window_limit(const Budgets& budgets, const TokenCounter& counter);

// Runs the read -> overwrite -> answer loop. Gateway failures abort the
// episode and return the partial trace with `error` set; a query over the
// query budget is rejected with std::invalid_argument before any call.
EpisodeTrace run_episode(const TaskInstance& instance, Gateway& gateway, const Budgets& budgets,
                         const TokenCounter& counter, int rollout_index = 0);

// Checks the structural trace invariants (ordering, memory bound, memory
// hand-off, window bound). Returns the list of violations.
std::vector<std::string> check_trace(const EpisodeTrace& trace, const Budgets& budgets,
                                     const TokenCounter& counter);

}  // namespace memagent
