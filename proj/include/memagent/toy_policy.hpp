#pragma once

#include <cstdint>
#include <vector>

#include "memagent/dapo.hpp"
#include "memagent/rng.hpp"

namespace memagent {

// Tabular softmax policy: one logit row per state.
class SoftmaxPolicy {
 public:
  SoftmaxPolicy(std::size_t num_states, std::size_t num_actions, double temperature = 1.0);

  std::size_t num_states() const { return states_; }
  std::size_t num_actions() const { return actions_; }
  double temperature() const { return temperature_; }

  double& logit(std::size_t s, std::size_t a) { return logits_[s * actions_ + a]; }
  double logit(std::size_t s, std::size_t a) const { return logits_[s * actions_ + a]; }
  std::vector<double>& logits() { return logits_; }
  const std::vector<double>& logits() const { return logits_; }

  std::vector<double> probs(std::size_t s) const;
  double log_prob(std::size_t s, std::size_t a) const;
  std::size_t sample(std::size_t s, Rng& rng) const;
  bool finite() const;

 private:
  std::size_t states_;
  std::size_t actions_;
  double temperature_;
  std::vector<double> logits_;
};

struct ToyToken {
  std::size_t state = 0;
  std::size_t action = 0;
};

struct ToyEpisode {
  std::vector<std::vector<ToyToken>> conversations;
  double reward = 0.0;
};

// Logprobs of every token under the three policies.
GroupBatch make_group_batch(const std::vector<ToyEpisode>& episodes, const SoftmaxPolicy& current,
                            const SoftmaxPolicy& old, const SoftmaxPolicy& ref);

struct PolicyGradient {
  ObjectiveResult objective;
  std::vector<double> grad;  // d objective / d logits, laid out like logits()
};

// Analytic gradient of dapo_objective with respect to the current logits.
PolicyGradient objective_gradient(const std::vector<ToyEpisode>& episodes,
                                  const SoftmaxPolicy& current, const SoftmaxPolicy& old,
                                  const SoftmaxPolicy& ref, const AdvantageTable& adv,
                                  const DapoConfig& config);

// Copy-memory game. Conversation 1 sees the symbol x in {0, 1} (state x) and
// writes one memory token m; conversation 2 sees only the memory (state
// 2 + m) and answers. Reward is 1 when the answer equals x.
struct ToyConfig {
  std::size_t group_size = 8;
  double learning_rate = 0.1;
  std::size_t steps = 500;
  // Gradient steps taken on each rollout batch before resampling.
  std::size_t updates_per_rollout = 16;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  double init_noise = 0.0;  // std of the initial logits
  DapoConfig dapo;
};

struct ToyStep {
  std::size_t step = 0;
  double mean_reward = 0.0;      // over the sampled group
  double expected_reward = 0.0;  // exact, under the policy used for sampling
  double objective = 0.0;        // on-policy objective before the first update
  double kl = 0.0;               // mean k3 after the last update
};

struct ToyCurve {
  std::vector<ToyStep> steps;
  std::vector<double> final_logits;
};

double toy_expected_reward(const SoftmaxPolicy& policy);

// Plain gradient ascent on the objective. Throws std::runtime_error naming the
// step when the logits stop being finite.
ToyCurve train_toy(const ToyConfig& config);

}  // namespace memagent
