#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memagent {

enum class AnswerMode { any_of, all_of };

std::string to_string(AnswerMode mode);
AnswerMode answer_mode_from_string(std::string_view name);

struct AnswerSet {
  std::vector<std::string> answers;
  AnswerMode mode = AnswerMode::any_of;

  // Throws std::invalid_argument on an empty set or an answer that
  // normalizes to nothing.
  void validate() const;
};

struct RewardResult {
  double score = 0.0;
  std::vector<bool> matched;  // one per ground truth
  std::string extracted_answer;
  bool extraction_ok = false;
  // Set when the score is not full but a ground truth nearly matched
  // (substring in either direction, or equal digit sequences). Report-only.
  bool near_miss = false;
};

struct BoxedAnswer {
  std::string answer;
  bool extraction_ok = false;
};

// Contents of the last \boxed{...}. Without a box the trimmed completion is
// returned; an unclosed box yields the text up to the end of input. Both set
// extraction_ok = false.
BoxedAnswer extract_boxed(std::string_view completion);

// SQuAD-style: lowercase, drop ASCII punctuation, drop the articles a/an/the,
// collapse whitespace.
std::string normalize_answer(std::string_view text);
bool is_equiv(std::string_view a, std::string_view b);

// 1 when pred is equivalent to any ground truth, else 0.
RewardResult reward_any_of(std::string_view pred, const AnswerSet& truth);
// Fraction of ground truths contained in pred after normalization. Numeric
// answers only match on whole-token boundaries.
RewardResult reward_all_of(std::string_view pred, const AnswerSet& truth);

// Extracts the boxed answer from a raw completion and scores it by the
// set's mode.
RewardResult score_completion(std::string_view completion, const AnswerSet& truth);

}  // namespace memagent
