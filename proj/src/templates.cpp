#include "memagent/templates.hpp"

#include <array>

namespace memagent {
namespace {

constexpr std::string_view kMemoryHeader =
    "You are presented with a problem, a section of an article that may contain the answer, "
    "and a previous memory. Please read the section carefully and update the memory with new "
    "information that helps to answer the problem, while retaining all relevant details from "
    "the previous memory.\n\n";
constexpr std::string_view kAnswerHeader =
    "You are presented with a problem and a previous memory. Please answer the problem based "
    "on the previous memory and put the answer in \\boxed{}.\n\n";

constexpr std::string_view kProblemOpen = "<problem> ";
constexpr std::string_view kProblemToMemory = " </problem>\n\n<memory> ";
constexpr std::string_view kMemoryToSection = " </memory>\n\n<section> ";
constexpr std::string_view kSectionClose = " </section>\n\nUpdated memory:";
constexpr std::string_view kMemoryClose = " </memory>\n\nYour answer:";

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

}  // namespace

MemoryState MemoryState::empty(const TokenCounter& counter, std::size_t capacity) {
  MemoryState m;
  m.capacity = capacity;
  m.token_count = counter.count(m.text);
  return m;
}

MemoryState MemoryState::overwrite(const TokenCounter& counter, std::string_view completion,
                                   std::size_t capacity) {
  MemoryState m;
  m.capacity = capacity;
  const std::string_view kept = counter.truncate(completion, capacity);
  m.truncated = kept.size() < completion.size();
  m.text = std::string(kept);
  m.token_count = counter.count(m.text);
  return m;
}

std::string render_memory_prompt(std::string_view problem, std::string_view memory,
                                 std::string_view chunk) {
  std::string out;
  out.reserve(kMemoryHeader.size() + problem.size() + memory.size() + chunk.size() + 96);
  out.append(kMemoryHeader)
      .append(kProblemOpen)
      .append(problem)
      .append(kProblemToMemory)
      .append(memory)
      .append(kMemoryToSection)
      .append(chunk)
      .append(kSectionClose);
  return out;
}

std::string render_answer_prompt(std::string_view problem, std::string_view memory) {
  std::string out;
  out.reserve(kAnswerHeader.size() + problem.size() + memory.size() + 64);
  out.append(kAnswerHeader)
      .append(kProblemOpen)
      .append(problem)
      .append(kProblemToMemory)
      .append(memory)
      .append(kMemoryClose);
  return out;
}

std::optional<ParsedPrompt> parse_prompt(std::string_view prompt) {
  ParsedPrompt out;
  std::string_view body;
  if (starts_with(prompt, kMemoryHeader)) {
    out.kind = PromptKind::memory_update;
    body = prompt.substr(kMemoryHeader.size());
  } else if (starts_with(prompt, kAnswerHeader)) {
    out.kind = PromptKind::answer;
    body = prompt.substr(kAnswerHeader.size());
  } else {
    return std::nullopt;
  }
  if (!starts_with(body, kProblemOpen)) return std::nullopt;
  body.remove_prefix(kProblemOpen.size());

  const auto p_end = body.find(kProblemToMemory);
  if (p_end == std::string_view::npos) return std::nullopt;
  out.problem = std::string(body.substr(0, p_end));
  body.remove_prefix(p_end + kProblemToMemory.size());

  if (out.kind == PromptKind::answer) {
    if (!ends_with(body, kMemoryClose)) return std::nullopt;
    out.memory = std::string(body.substr(0, body.size() - kMemoryClose.size()));
    return out;
  }
  const auto m_end = body.find(kMemoryToSection);
  if (m_end == std::string_view::npos || !ends_with(body, kSectionClose)) return std::nullopt;
  out.memory = std::string(body.substr(0, m_end));
  body.remove_prefix(m_end + kMemoryToSection.size());
  if (body.size() < kSectionClose.size()) return std::nullopt;
  out.section = std::string(body.substr(0, body.size() - kSectionClose.size()));
  return out;
}

std::vector<std::string> tag_collisions(std::string_view problem, std::string_view memory,
                                        std::string_view chunk) {
  static constexpr std::array<std::string_view, 6> kTags = {
      "<problem>", "</problem>", "<memory>", "</memory>", "<section>", "</section>"};
  std::vector<std::string> warnings;
  const std::array<std::pair<std::string_view, std::string_view>, 3> fields = {
      {{"problem", problem}, {"memory", memory}, {"chunk", chunk}}};
  for (const auto& [name, text] : fields) {
    for (auto tag : kTags) {
      if (text.find(tag) != std::string_view::npos) {
        warnings.push_back("tag collision: " + std::string(name) + " contains " +
                           std::string(tag));
      }
    }
  }
  return warnings;
}

TemplateOverhead measure_template_overhead(const TokenCounter& counter) {
  return {counter.count(render_memory_prompt("", "", "")),
          counter.count(render_answer_prompt("", ""))};
}

}  // namespace memagent
