#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memagent/token_counter.hpp"

namespace memagent {

// Initial memory content before any chunk has been read.
inline constexpr std::string_view kEmptyMemory = "No previous memory.";

// Fixed-capacity overwrite memory.
struct MemoryState {
  std::string text{kEmptyMemory};
  std::size_t token_count = 0;
  std::size_t capacity = 1024;
  bool truncated = false;

  static MemoryState empty(const TokenCounter& counter, std::size_t capacity);
  // Replaces the memory with `completion`, hard-truncated to `capacity` tokens.
  static MemoryState overwrite(const TokenCounter& counter, std::string_view completion,
                               std::size_t capacity);
};

std::string render_memory_prompt(std::string_view problem, std::string_view memory,
                                 std::string_view chunk);
std::string render_answer_prompt(std::string_view problem, std::string_view memory);

enum class PromptKind { memory_update, answer };

struct ParsedPrompt {
  PromptKind kind = PromptKind::memory_update;
  std::string problem;
  std::string memory;
  std::optional<std::string> section;
};

// Inverse of the renderers. Returns nullopt for text that is not a rendered
// prompt.
std::optional<ParsedPrompt> parse_prompt(std::string_view prompt);

// Warnings for user text that contains one of the structural tags. The text is
// still rendered verbatim.
std::vector<std::string> tag_collisions(std::string_view problem, std::string_view memory,
                                        std::string_view chunk = {});

struct TemplateOverhead {
  std::size_t memory_update = 0;
  std::size_t answer = 0;
};

// Token cost of each template with every placeholder empty.
TemplateOverhead measure_template_overhead(const TokenCounter& counter);

}  // namespace memagent
