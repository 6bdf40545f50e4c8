#include "memagent/verifiers.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace memagent {
namespace {

bool is_ascii_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}
bool is_alnum_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string digits_only(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c >= '0' && c <= '9') out.push_back(c);
  return out;
}

bool contains_answer(std::string_view pred_norm, std::string_view truth_norm) {
  if (truth_norm.empty()) return false;
  if (!all_digits(truth_norm)) return pred_norm.find(truth_norm) != std::string_view::npos;
  for (auto pos = pred_norm.find(truth_norm); pos != std::string_view::npos;
       pos = pred_norm.find(truth_norm, pos + 1)) {
    const auto end = pos + truth_norm.size();
    const bool left_ok = pos == 0 || !is_alnum_byte(pred_norm[pos - 1]);
    const bool right_ok = end == pred_norm.size() || !is_alnum_byte(pred_norm[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

bool loose_match(const std::string& pred_norm, const std::string& truth_norm) {
  if (pred_norm.empty() || truth_norm.empty()) return false;
  if (pred_norm.find(truth_norm) != std::string::npos ||
      truth_norm.find(pred_norm) != std::string::npos)
    return true;
  const auto a = digits_only(pred_norm);
  return !a.empty() && a == digits_only(truth_norm);
}

}  // namespace

std::string to_string(AnswerMode mode) {
  return mode == AnswerMode::any_of ? "any_of" : "all_of";
}

AnswerMode answer_mode_from_string(std::string_view name) {
  if (name == "any_of") return AnswerMode::any_of;
  if (name == "all_of") return AnswerMode::all_of;
  throw std::invalid_argument("unknown answer mode: " + std::string(name));
}

void AnswerSet::validate() const {
  if (answers.empty()) throw std::invalid_argument("answer set is empty");
  for (const auto& a : answers) {
    if (normalize_answer(a).empty())
      throw std::invalid_argument("answer normalizes to empty string: '" + a + "'");
  }
}

BoxedAnswer extract_boxed(std::string_view completion) {
  static constexpr std::string_view kOpen = "\\boxed{";
  const auto start = completion.rfind(kOpen);
  if (start == std::string_view::npos) return {std::string(trim(completion)), false};

  const auto content_begin = start + kOpen.size();
  int depth = 1;
  for (auto i = content_begin; i < completion.size(); ++i) {
    if (completion[i] == '{') {
      ++depth;
    } else if (completion[i] == '}' && --depth == 0) {
      return {std::string(completion.substr(content_begin, i - content_begin)), true};
    }
  }
  return {std::string(completion.substr(content_begin)), false};
}

std::string normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    if (is_ascii_punct(c)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::string out;
  std::istringstream words(cleaned);
  std::string w;
  while (words >> w) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

bool is_equiv(std::string_view a, std::string_view b) {
  return normalize_answer(a) == normalize_answer(b);
}

RewardResult reward_any_of(std::string_view pred, const AnswerSet& truth) {
  if (truth.mode != AnswerMode::any_of)
    throw std::invalid_argument("reward_any_of requires an any_of answer set");
  RewardResult r;
  r.extracted_answer = std::string(pred);
  r.extraction_ok = true;
  const auto pred_norm = normalize_answer(pred);
  for (const auto& y : truth.answers) {
    const auto y_norm = normalize_answer(y);
    const bool hit = pred_norm == y_norm;
    r.matched.push_back(hit);
    if (hit) r.score = 1.0;
    else if (loose_match(pred_norm, y_norm)) r.near_miss = true;
  }
  if (r.score == 1.0) r.near_miss = false;
  return r;
}

RewardResult reward_all_of(std::string_view pred, const AnswerSet& truth) {
  if (truth.mode != AnswerMode::all_of)
    throw std::invalid_argument("reward_all_of requires an all_of answer set");
  if (truth.answers.empty()) throw std::invalid_argument("answer set is empty");
  RewardResult r;
  r.extracted_answer = std::string(pred);
  r.extraction_ok = true;
  const auto pred_norm = normalize_answer(pred);
  std::size_t hits = 0;
  for (const auto& y : truth.answers) {
    const auto y_norm = normalize_answer(y);
    const bool hit = contains_answer(pred_norm, y_norm);
    r.matched.push_back(hit);
    if (hit) ++hits;
    else if (!y_norm.empty() && pred_norm.find(y_norm) != std::string::npos) r.near_miss = true;
  }
  r.score = static_cast<double>(hits) / static_cast<double>(truth.answers.size());
  return r;
}

RewardResult score_completion(std::string_view completion, const AnswerSet& truth) {
  const auto boxed = extract_boxed(completion);
  RewardResult r = truth.mode == AnswerMode::any_of ? reward_any_of(boxed.answer, truth)
                                                    : reward_all_of(boxed.answer, truth);
  r.extraction_ok = boxed.extraction_ok;
  return r;
}

}  // namespace memagent
