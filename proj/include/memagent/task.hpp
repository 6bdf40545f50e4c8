#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "memagent/verifiers.hpp"

namespace memagent {

enum class TaskFamily {
  niah_single_1,
  niah_single_2,
  niah_single_3,
  niah_multikey_1,
  niah_multikey_2,
  niah_multikey_3,
  niah_multiquery,
  niah_multivalue,
  variable_tracking,
  freq_words,
  qa_haystack,
};

std::string to_string(TaskFamily family);
TaskFamily task_family_from_string(std::string_view name);
const std::vector<TaskFamily>& all_task_families();

bool is_niah(TaskFamily family);
// Families whose answers must appear verbatim in the context.
bool is_retrieval_family(TaskFamily family);
// The answer mode each family is scored with.
AnswerMode answer_mode_for(TaskFamily family);

// One synthetic long-context problem.
struct TaskInstance {
  std::string instance_id;
  TaskFamily family = TaskFamily::niah_single_1;
  std::string context;
  std::string question;
  AnswerSet answers;
  std::size_t target_token_count = 0;
  // Schedule value the instance was generated for: a token target for the
  // synthetic families, an article count for qa_haystack.
  std::size_t length_bucket = 0;
  // Byte offsets into `context` of the answer-bearing needles / paragraphs.
  std::vector<std::size_t> golden_positions;
  std::vector<std::string> tags;

  bool operator==(const TaskInstance&) const = default;
};

inline bool operator==(const AnswerSet& a, const AnswerSet& b) {
  return a.mode == b.mode && a.answers == b.answers;
}

nlohmann::json to_json(const TaskInstance& task);
TaskInstance task_from_json(const nlohmann::json& j);

// Dataset JSONL: one TaskInstance per line. Errors name the offending line.
std::vector<TaskInstance> read_dataset(const std::string& path);
void write_dataset(const std::string& path, const std::vector<TaskInstance>& tasks);

}  // namespace memagent
