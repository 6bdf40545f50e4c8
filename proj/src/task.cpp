#include "memagent/task.hpp"

#include "memagent/jsonl.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

namespace memagent {
namespace {

constexpr std::array<std::pair<TaskFamily, std::string_view>, 11> kFamilyNames = {{
    {TaskFamily::niah_single_1, "niah_single_1"},
    {TaskFamily::niah_single_2, "niah_single_2"},
    {TaskFamily::niah_single_3, "niah_single_3"},
    {TaskFamily::niah_multikey_1, "niah_multikey_1"},
    {TaskFamily::niah_multikey_2, "niah_multikey_2"},
    {TaskFamily::niah_multikey_3, "niah_multikey_3"},
    {TaskFamily::niah_multiquery, "niah_multiquery"},
    {TaskFamily::niah_multivalue, "niah_multivalue"},
    {TaskFamily::variable_tracking, "variable_tracking"},
    {TaskFamily::freq_words, "freq_words"},
    {TaskFamily::qa_haystack, "qa_haystack"},
}};

}  // namespace

std::string to_string(TaskFamily family) {
  for (const auto& [f, name] : kFamilyNames)
    if (f == family) return std::string(name);
  return "unknown";
}

TaskFamily task_family_from_string(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames)
    if (n == name) return f;
  throw std::invalid_argument("unknown task family: " + std::string(name));
}

const std::vector<TaskFamily>& all_task_families() {
  static const std::vector<TaskFamily> families = [] {
    std::vector<TaskFamily> out;
    for (const auto& [f, name] : kFamilyNames) out.push_back(f);
    return out;
  }();
  return families;
}

bool is_niah(TaskFamily family) {
  return family != TaskFamily::variable_tracking && family != TaskFamily::freq_words &&
         family != TaskFamily::qa_haystack;
}

bool is_retrieval_family(TaskFamily family) { return family != TaskFamily::qa_haystack; }

AnswerMode answer_mode_for(TaskFamily family) {
  switch (family) {
    case TaskFamily::niah_multiquery:
    case TaskFamily::niah_multivalue:
    case TaskFamily::variable_tracking:
    case TaskFamily::freq_words:
      return AnswerMode::all_of;
    default:
      return AnswerMode::any_of;
  }
}

nlohmann::json to_json(const TaskInstance& t) {
  return nlohmann::json{
      {"instance_id", t.instance_id},
      {"family", to_string(t.family)},
      {"context", t.context},
      {"question", t.question},
      {"answers", t.answers.answers},
      {"answer_mode", to_string(t.answers.mode)},
      {"target_token_count", t.target_token_count},
      {"length_bucket", t.length_bucket},
      {"golden_positions", t.golden_positions},
      {"tags", t.tags},
  };
}

TaskInstance task_from_json(const nlohmann::json& j) {
  TaskInstance t;
  t.instance_id = j.at("instance_id").get<std::string>();
  t.family = task_family_from_string(j.at("family").get<std::string>());
  t.context = j.at("context").get<std::string>();
  t.question = j.at("question").get<std::string>();
  t.answers.answers = j.at("answers").get<std::vector<std::string>>();
  t.answers.mode = answer_mode_from_string(j.at("answer_mode").get<std::string>());
  t.target_token_count = j.at("target_token_count").get<std::size_t>();
  t.length_bucket = j.value("length_bucket", t.target_token_count);
  t.golden_positions = j.value("golden_positions", std::vector<std::size_t>{});
  t.tags = j.value("tags", std::vector<std::string>{});
  t.answers.validate();
  if (t.instance_id.empty()) throw std::invalid_argument("instance_id is empty");
  if (t.context.empty()) throw std::invalid_argument("context is empty");
  return t;
}

std::vector<TaskInstance> read_dataset(const std::string& path) {
  std::vector<TaskInstance> out;
  for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
    out.push_back(task_from_json(j));
  });
  return out;
}

void write_dataset(const std::string& path, const std::vector<TaskInstance>& tasks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  for (const auto& t : tasks) out << jsonl_dump(to_json(t)) << '\n';
}

}  // namespace memagent
