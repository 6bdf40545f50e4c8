#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace memagent {

class DapoError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DapoConfig {
  std::size_t group_size = 16;
  double eps_low = 0.2;
  double eps_high = 0.28;
  double kl_beta = 1e-3;
  bool normalize_by_std = false;  // GRPO-style advantage when set

  void validate() const;
};

// One scalar per episode, shared by every token of every conversation of
// that episode.
struct AdvantageTable {
  std::vector<double> episode;

  double at(std::size_t episode_index, std::size_t /*conversation*/ = 0,
            std::size_t /*token*/ = 0) const {
    return episode.at(episode_index);
  }
  std::size_t size() const { return episode.size(); }
};

// A_i = R_i - mean(R), optionally divided by the population std. Throws
// DapoError("degenerate group") in std mode when all rewards are equal.
AdvantageTable compute_advantages(const std::vector<double>& rewards, const DapoConfig& config);

struct ConversationTokens {
  std::vector<long long> token_ids;
  std::vector<double> logprob_new;
  std::vector<double> logprob_old;
  std::vector<double> logprob_ref;

  std::size_t size() const { return logprob_new.size(); }
};

struct EpisodeTokens {
  std::vector<ConversationTokens> conversations;
  double reward = 0.0;
};

// G episodes sampled for one question.
struct GroupBatch {
  std::vector<EpisodeTokens> episodes;

  std::vector<double> rewards() const;
  std::size_t total_tokens() const;
};

struct TokenTerm {
  double ratio = 1.0;
  double contribution = 0.0;  // min(r A, clip(r) A)
  double kl = 0.0;            // k3 estimate
  bool clipped = false;       // the clipped branch of the min is active
  double grad_logprob_new = 0.0;  // d objective / d logprob_new
};

struct ObjectiveResult {
  double value = 0.0;
  double surrogate_sum = 0.0;
  double kl_sum = 0.0;
  std::size_t total_tokens = 0;
  // tokens[i][j][t] for episode i, conversation j, token t.
  std::vector<std::vector<std::vector<TokenTerm>>> tokens;

  double mean_kl() const { return total_tokens ? kl_sum / static_cast<double>(total_tokens) : 0.0; }
};

// (sum C - beta * sum KL) / (number of tokens across all conversations of all
// episodes). Throws DapoError on shape mismatches or non-finite logprobs.
ObjectiveResult dapo_objective(const GroupBatch& batch, const AdvantageTable& adv,
                               const DapoConfig& config);

// k3 = exp(d) - d - 1 with d = logprob_ref - logprob_new, per token.
std::vector<double> kl_penalty(const std::vector<double>& logprob_new,
                               const std::vector<double>& logprob_ref);

}  // namespace memagent
