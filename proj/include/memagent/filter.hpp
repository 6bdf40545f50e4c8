#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "memagent/gateway.hpp"
#include "memagent/task.hpp"
#include "memagent/verifiers.hpp"

namespace memagent {

// Returns the reward of a completion; 1.0 counts as correct.
using Verifier = std::function<double(std::string_view completion, const AnswerSet& truth)>;

inline double default_verifier(std::string_view completion, const AnswerSet& truth) {
  return score_completion(completion, truth).score;
}

struct FilterOutcome {
  std::vector<TaskInstance> kept;     // includes unfiltered samples, tagged "unfiltered"
  std::vector<TaskInstance> dropped;  // answered correctly without context
  std::size_t unfiltered = 0;         // gateway failed; kept with the tag
  double drop_rate = 0.0;             // dropped / total
};

inline constexpr std::string_view kUnfilteredTag = "unfiltered";

// Asks each question `attempts` times with the answer template and the empty
// memory sentinel in place of any context, and drops the sample if any attempt
// is verified correct. Samples run in parallel up to the gateway's in-flight
// bound; output order follows the input.
FilterOutcome filter_known_questions(const std::vector<TaskInstance>& samples, Gateway& gateway,
                                     const Verifier& verifier = default_verifier, int attempts = 2);

}  // namespace memagent
