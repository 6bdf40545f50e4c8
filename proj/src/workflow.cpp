#include "memagent/workflow.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace memagent {

std::string to_string(ConversationKind kind) {
  return kind == ConversationKind::answer ? "answer" : "memory_update";
}

ConversationKind conversation_kind_from_string(std::string_view name) {
  if (name == "memory_update") return ConversationKind::memory_update;
  if (name == "answer") return ConversationKind::answer;
  throw std::invalid_argument("unknown conversation kind: " + std::string(name));
}

ChunkPlan chunk_document(std::string_view text, std::size_t budget, const TokenCounter& counter) {
  if (budget < 1) throw std::invalid_argument("chunk budget must be >= 1");
  if (text.empty()) throw std::invalid_argument("cannot chunk an empty document");
  const auto ends = counter.token_ends(text);
  if (ends.empty()) throw std::invalid_argument("document contains no tokens");

  ChunkPlan plan;
  plan.budget = budget;
  plan.total_tokens = ends.size();
  std::size_t begin = 0;
  for (std::size_t first = 0; first < ends.size(); first += budget) {
    const std::size_t last = std::min(first + budget, ends.size()) - 1;
    plan.chunk_texts.emplace_back(text.substr(begin, ends[last] - begin));
    plan.chunk_token_counts.push_back(last - first + 1);
    begin = ends[last];
  }
  return plan;
}

std::size_t window_limit(const Budgets& budgets, const TokenCounter& counter) {
  const auto overhead = measure_template_overhead(counter);
  return budgets.query + budgets.chunk + budgets.memory +
         std::max(overhead.memory_update, overhead.answer);
}

EpisodeTrace run_episode(const TaskInstance& instance, Gateway& gateway, const Budgets& budgets,
                         const TokenCounter& counter, int rollout_index) {
  if (instance.context.empty()) throw std::invalid_argument("instance context is empty");
  const auto query_tokens = counter.count(instance.question);
  if (query_tokens > budgets.query) {
    throw std::invalid_argument("query of " + std::to_string(query_tokens) +
                                " tokens exceeds the query budget of " +
                                std::to_string(budgets.query));
  }
  const ChunkPlan plan = chunk_document(instance.context, budgets.chunk, counter);

  EpisodeTrace trace;
  trace.sample_id = instance.instance_id;
  trace.rollout_index = rollout_index;
  trace.conversations.reserve(plan.size() + 1);
  MemoryState memory = MemoryState::empty(counter, budgets.memory);
  const int max_out = static_cast<int>(budgets.output);

  auto call = [&](ConversationRecord& rec) {
    rec.prompt_tokens = counter.count(rec.prompt);
    const auto start = std::chrono::steady_clock::now();
    Completion c = gateway.complete(rec.prompt, max_out);
    rec.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rec.completion = std::move(c.text);
    rec.completion_token_ids = std::move(c.token_ids);
    rec.completion_logprobs = std::move(c.logprobs);
  };

  try {
    for (const auto& chunk : plan.chunk_texts) {
      ConversationRecord rec;
      rec.kind = ConversationKind::memory_update;
      rec.prompt = render_memory_prompt(instance.question, memory.text, chunk);
      rec.warnings = tag_collisions(instance.question, memory.text, chunk);
      call(rec);
      memory = MemoryState::overwrite(counter, rec.completion, budgets.memory);
      if (memory.truncated) rec.warnings.push_back("memory truncated to capacity");
      rec.memory_after = memory;
      trace.conversations.push_back(std::move(rec));
    }
    ConversationRecord rec;
    rec.kind = ConversationKind::answer;
    rec.prompt = render_answer_prompt(instance.question, memory.text);
    rec.warnings = tag_collisions(instance.question, memory.text);
    call(rec);
    trace.final_answer = rec.completion;
    trace.conversations.push_back(std::move(rec));
  } catch (const GatewayError& e) {
    trace.error = e.what();
  }
  return trace;
}

std::vector<std::string> check_trace(const EpisodeTrace& trace, const Budgets& budgets,
                                     const TokenCounter& counter) {
  std::vector<std::string> problems;
  const auto limit = window_limit(budgets, counter);
  std::string previous_memory(kEmptyMemory);
  for (std::size_t j = 0; j < trace.conversations.size(); ++j) {
    const auto& c = trace.conversations[j];
    const auto tag = "conversation " + std::to_string(j) + ": ";
    if (c.kind == ConversationKind::answer && j + 1 != trace.conversations.size())
      problems.push_back(tag + "answer conversation is not last");
    if (counter.count(c.prompt) > limit) problems.push_back(tag + "prompt exceeds the window");
    const auto parsed = parse_prompt(c.prompt);
    if (!parsed || parsed->memory != previous_memory)
      problems.push_back(tag + "prompt does not embed the previous memory");
    if (c.kind == ConversationKind::memory_update) {
      if (!c.memory_after) {
        problems.push_back(tag + "memory_update without memory_after");
        continue;
      }
      if (c.memory_after->token_count > budgets.memory ||
          counter.count(c.memory_after->text) != c.memory_after->token_count)
        problems.push_back(tag + "memory exceeds capacity or has a stale token count");
      previous_memory = c.memory_after->text;
    }
  }
  if (trace.complete() &&
      std::count_if(trace.conversations.begin(), trace.conversations.end(),
                    [](const auto& c) { return c.kind == ConversationKind::answer; }) != 1)
    problems.push_back("trace must contain exactly one answer conversation");
  return problems;
}

}  // namespace memagent
