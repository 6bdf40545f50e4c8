#include "memagent/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace memagent {

SoftmaxPolicy::SoftmaxPolicy(std::size_t num_states, std::size_t num_actions, double temperature)
    : states_(num_states), actions_(num_actions), temperature_(temperature),
      logits_(num_states * num_actions, 0.0) {
  if (num_states == 0 || num_actions == 0) throw std::invalid_argument("empty policy table");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
}

std::vector<double> SoftmaxPolicy::probs(std::size_t s) const {
  std::vector<double> p(actions_);
  double mx = -INFINITY;
  for (std::size_t a = 0; a < actions_; ++a) mx = std::max(mx, logit(s, a) / temperature_);
  double z = 0.0;
  for (std::size_t a = 0; a < actions_; ++a) z += p[a] = std::exp(logit(s, a) / temperature_ - mx);
  for (double& v : p) v /= z;
  return p;
}

double SoftmaxPolicy::log_prob(std::size_t s, std::size_t a) const {
  double mx = -INFINITY;
  for (std::size_t b = 0; b < actions_; ++b) mx = std::max(mx, logit(s, b) / temperature_);
  double z = 0.0;
  for (std::size_t b = 0; b < actions_; ++b) z += std::exp(logit(s, b) / temperature_ - mx);
  return logit(s, a) / temperature_ - mx - std::log(z);
}

std::size_t SoftmaxPolicy::sample(std::size_t s, Rng& rng) const {
  const auto p = probs(s);
  double u = rng.uniform();
  for (std::size_t a = 0; a + 1 < p.size(); ++a) {
    if (u < p[a]) return a;
    u -= p[a];
  }
  return p.size() - 1;
}

bool SoftmaxPolicy::finite() const {
  return std::all_of(logits_.begin(), logits_.end(), [](double v) { return std::isfinite(v); });
}

GroupBatch make_group_batch(const std::vector<ToyEpisode>& episodes, const SoftmaxPolicy& current,
                            const SoftmaxPolicy& old, const SoftmaxPolicy& ref) {
  GroupBatch batch;
  batch.episodes.reserve(episodes.size());
  for (const auto& ep : episodes) {
    EpisodeTokens et;
    et.reward = ep.reward;
    for (const auto& conv : ep.conversations) {
      ConversationTokens ct;
      for (const auto& tok : conv) {
        ct.token_ids.push_back(static_cast<long long>(tok.action));
        ct.logprob_new.push_back(current.log_prob(tok.state, tok.action));
        ct.logprob_old.push_back(old.log_prob(tok.state, tok.action));
        ct.logprob_ref.push_back(ref.log_prob(tok.state, tok.action));
      }
      et.conversations.push_back(std::move(ct));
    }
    batch.episodes.push_back(std::move(et));
  }
  return batch;
}

PolicyGradient objective_gradient(const std::vector<ToyEpisode>& episodes,
                                  const SoftmaxPolicy& current, const SoftmaxPolicy& old,
                                  const SoftmaxPolicy& ref, const AdvantageTable& adv,
                                  const DapoConfig& config) {
  PolicyGradient out;
  out.objective = dapo_objective(make_group_batch(episodes, current, old, ref), adv, config);
  out.grad.assign(current.logits().size(), 0.0);
  const std::size_t na = current.num_actions();
  const double inv_tau = 1.0 / current.temperature();
  // d log p(a|s) / d z[s,b] = (1[a == b] - p_b) / tau
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    for (std::size_t j = 0; j < episodes[i].conversations.size(); ++j) {
      const auto& conv = episodes[i].conversations[j];
      for (std::size_t t = 0; t < conv.size(); ++t) {
        const double g = out.objective.tokens[i][j][t].grad_logprob_new;
        if (g == 0.0) continue;
        const auto p = current.probs(conv[t].state);
        for (std::size_t b = 0; b < na; ++b) {
          const double onehot = b == conv[t].action ? 1.0 : 0.0;
          out.grad[conv[t].state * na + b] += g * (onehot - p[b]) * inv_tau;
        }
      }
    }
  }
  return out;
}

double toy_expected_reward(const SoftmaxPolicy& policy) {
  double r = 0.0;
  for (std::size_t x = 0; x < 2; ++x) {
    const auto write = policy.probs(x);
    for (std::size_t m = 0; m < 2; ++m) r += 0.5 * write[m] * policy.probs(2 + m)[x];
  }
  return r;
}

ToyCurve train_toy(const ToyConfig& config) {
  if (config.group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  if (config.updates_per_rollout < 1) throw std::invalid_argument("updates_per_rollout must be >= 1");
  DapoConfig dapo = config.dapo;
  dapo.group_size = config.group_size;
  dapo.validate();

  Rng rng(config.seed);
  SoftmaxPolicy policy(4, 2, config.temperature);
  if (config.init_noise > 0.0) {
    // Box-Muller keeps the draw sequence platform independent.
    for (double& z : policy.logits()) {
      const double u1 = 1.0 - rng.uniform();
      const double u2 = rng.uniform();
      z = config.init_noise * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
  }
  const SoftmaxPolicy ref = policy;

  ToyCurve curve;
  curve.steps.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    ToyStep rec;
    rec.step = step;
    rec.expected_reward = toy_expected_reward(policy);

    const std::size_t x = rng.below(2);
    std::vector<ToyEpisode> episodes(config.group_size);
    std::vector<double> rewards;
    for (auto& ep : episodes) {
      const std::size_t m = policy.sample(x, rng);
      const std::size_t a = policy.sample(2 + m, rng);
      ep.conversations = {{{x, m}}, {{2 + m, a}}};
      ep.reward = a == x ? 1.0 : 0.0;
      rewards.push_back(ep.reward);
    }
    for (double r : rewards) rec.mean_reward += r;
    rec.mean_reward /= static_cast<double>(rewards.size());

    AdvantageTable adv;
    const bool flat = std::all_of(rewards.begin(), rewards.end(),
                                  [&](double r) { return r == rewards.front(); });
    if (flat && dapo.normalize_by_std) {
      adv.episode.assign(rewards.size(), 0.0);  // no signal in this group
    } else {
      adv = compute_advantages(rewards, dapo);
    }

    const SoftmaxPolicy old = policy;
    for (std::size_t u = 0; u < config.updates_per_rollout; ++u) {
      const auto pg = objective_gradient(episodes, policy, old, ref, adv, dapo);
      if (u == 0) rec.objective = pg.objective.value;
      for (std::size_t k = 0; k < pg.grad.size(); ++k)
        policy.logits()[k] += config.learning_rate * pg.grad[k];
      if (!policy.finite())
        throw std::runtime_error("toy training diverged at step " + std::to_string(step));
      rec.kl = pg.objective.mean_kl();
    }
    curve.steps.push_back(rec);
  }
  curve.final_logits = policy.logits();
  return curve;
}

}  // namespace memagent
