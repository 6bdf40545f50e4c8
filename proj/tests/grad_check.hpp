#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "memagent/toy_policy.hpp"

namespace memagent::testing {

struct GradCase {
  std::vector<ToyEpisode> episodes;
  SoftmaxPolicy current{1, 1};
  SoftmaxPolicy old{1, 1};
  SoftmaxPolicy ref{1, 1};
  AdvantageTable adv;
  DapoConfig config;
};

// Random tiny batch: a few states and actions, ragged conversations, old and
// reference policies perturbed away from the current one so that some tokens
// sit on the clipped branch.
inline GradCase random_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const std::size_t states = uniform(2, 4), actions = uniform(2, 4);
  GradCase g;
  g.current = SoftmaxPolicy(states, actions, 0.5 + 0.5 * static_cast<double>(seed % 3));
  g.old = g.current;
  g.ref = g.current;
  for (std::size_t i = 0; i < g.current.logits().size(); ++i) {
    g.current.logits()[i] = normal(rng);
    g.old.logits()[i] = g.current.logits()[i] + 0.3 * normal(rng);
    g.ref.logits()[i] = g.current.logits()[i] + 0.5 * normal(rng);
  }
  const std::size_t group = uniform(2, 5);
  std::vector<double> rewards;
  for (std::size_t e = 0; e < group; ++e) {
    ToyEpisode ep;
    const std::size_t convs = uniform(1, 4);
    for (std::size_t c = 0; c < convs; ++c) {
      std::vector<ToyToken> toks;
      const std::size_t n = uniform(1, 5);
      for (std::size_t t = 0; t < n; ++t) toks.push_back({uniform(0, states - 1), uniform(0, actions - 1)});
      ep.conversations.push_back(toks);
    }
    ep.reward = static_cast<double>(uniform(0, 1));
    rewards.push_back(ep.reward);
    g.episodes.push_back(ep);
  }
  g.config.group_size = group;
  g.config.kl_beta = 0.05;
  g.adv.episode.clear();
  for (std::size_t e = 0; e < group; ++e) g.adv.episode.push_back(normal(rng));
  return g;
}

inline double objective_at(const GradCase& g, const SoftmaxPolicy& current) {
  return dapo_objective(make_group_batch(g.episodes, current, g.old, g.ref), g.adv, g.config).value;
}

// max |analytic - numeric| / max(max |numeric|, 1e-8), central differences.
inline double gradient_rel_error(const GradCase& g, double h = 1e-5) {
  const auto analytic =
      objective_gradient(g.episodes, g.current, g.old, g.ref, g.adv, g.config).grad;
  double worst = 0.0, scale = 0.0;
  SoftmaxPolicy probe = g.current;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double x = probe.logits()[i];
    probe.logits()[i] = x + h;
    const double up = objective_at(g, probe);
    probe.logits()[i] = x - h;
    const double down = objective_at(g, probe);
    probe.logits()[i] = x;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::fabs(analytic[i] - numeric));
    scale = std::max(scale, std::fabs(numeric));
  }
  return worst / std::max(scale, 1e-8);
}

}  // namespace memagent::testing
