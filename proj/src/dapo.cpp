#include "memagent/dapo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace memagent {
namespace {

void check_finite(const std::vector<double>& v, const char* what, std::size_t episode,
                  std::size_t conversation) {
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (!std::isfinite(v[t])) {
      throw DapoError(std::string("non-finite ") + what + " at episode " + std::to_string(episode) +
                      ", conversation " + std::to_string(conversation) + ", token " +
                      std::to_string(t));
    }
  }
}

}  // namespace

void DapoConfig::validate() const {
  if (group_size < 1) throw DapoError("group_size must be >= 1");
  if (!(eps_low > 0.0 && eps_low <= eps_high && eps_high < 1.0))
    throw DapoError("need 0 < eps_low <= eps_high < 1");
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw DapoError("kl_beta must be >= 0");
}

AdvantageTable compute_advantages(const std::vector<double>& rewards, const DapoConfig& config) {
  config.validate();
  if (rewards.size() != config.group_size) {
    throw DapoError("expected " + std::to_string(config.group_size) + " rewards, got " +
                    std::to_string(rewards.size()));
  }
  for (double r : rewards)
    if (!std::isfinite(r)) throw DapoError("non-finite reward");

  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  AdvantageTable table;
  table.episode.reserve(rewards.size());
  for (double r : rewards) table.episode.push_back(r - mean);

  if (config.normalize_by_std) {
    double ss = 0.0;
    for (double a : table.episode) ss += a * a;
    const double sd = std::sqrt(ss / n);
    if (sd == 0.0) throw DapoError("degenerate group: all rewards are equal");
    for (double& a : table.episode) a /= sd;
  }
  return table;
}

std::vector<double> GroupBatch::rewards() const {
  std::vector<double> r;
  r.reserve(episodes.size());
  for (const auto& e : episodes) r.push_back(e.reward);
  return r;
}

std::size_t GroupBatch::total_tokens() const {
  std::size_t n = 0;
  for (const auto& e : episodes)
    for (const auto& c : e.conversations) n += c.size();
  return n;
}

std::vector<double> kl_penalty(const std::vector<double>& logprob_new,
                               const std::vector<double>& logprob_ref) {
  if (logprob_new.size() != logprob_ref.size())
    throw DapoError("kl_penalty: logprob arrays differ in length");
  std::vector<double> out(logprob_new.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (!std::isfinite(logprob_new[t]) || !std::isfinite(logprob_ref[t]))
      throw DapoError("kl_penalty: non-finite logprob at token " + std::to_string(t));
    const double d = logprob_ref[t] - logprob_new[t];
    // expm1(d) - d avoids cancellation for small d; clamp the rounding
    // residue that can dip just below zero.
    out[t] = std::max(0.0, std::expm1(d) - d);
  }
  return out;
}

ObjectiveResult dapo_objective(const GroupBatch& batch, const AdvantageTable& adv,
                               const DapoConfig& config) {
  config.validate();
  if (batch.episodes.size() != adv.size()) {
    throw DapoError("batch has " + std::to_string(batch.episodes.size()) +
                    " episodes but the advantage table has " + std::to_string(adv.size()));
  }
  ObjectiveResult out;
  out.total_tokens = batch.total_tokens();
  if (out.total_tokens == 0) throw DapoError("batch holds no tokens");
  const double inv_t = 1.0 / static_cast<double>(out.total_tokens);
  const double lo = 1.0 - config.eps_low;
  const double hi = 1.0 + config.eps_high;

  out.tokens.resize(batch.episodes.size());
  for (std::size_t i = 0; i < batch.episodes.size(); ++i) {
    const auto& ep = batch.episodes[i];
    const double a = adv.episode[i];
    out.tokens[i].resize(ep.conversations.size());
    for (std::size_t j = 0; j < ep.conversations.size(); ++j) {
      const auto& c = ep.conversations[j];
      const std::size_t n = c.logprob_new.size();
      if (c.logprob_old.size() != n || c.logprob_ref.size() != n ||
          (!c.token_ids.empty() && c.token_ids.size() != n)) {
        throw DapoError("shape mismatch in episode " + std::to_string(i) + ", conversation " +
                        std::to_string(j));
      }
      check_finite(c.logprob_new, "logprob_new", i, j);
      check_finite(c.logprob_old, "logprob_old", i, j);
      check_finite(c.logprob_ref, "logprob_ref", i, j);
      const auto kl = kl_penalty(c.logprob_new, c.logprob_ref);

      auto& terms = out.tokens[i][j];
      terms.resize(n);
      for (std::size_t t = 0; t < n; ++t) {
        TokenTerm& term = terms[t];
        term.ratio = std::exp(c.logprob_new[t] - c.logprob_old[t]);
        const double unclipped = term.ratio * a;
        const double clipped = std::clamp(term.ratio, lo, hi) * a;
        term.clipped = clipped < unclipped;
        term.contribution = term.clipped ? clipped : unclipped;
        term.kl = kl[t];
        const double d_surrogate = term.clipped ? 0.0 : unclipped;
        const double d_kl = 1.0 - std::exp(c.logprob_ref[t] - c.logprob_new[t]);
        term.grad_logprob_new = (d_surrogate - config.kl_beta * d_kl) * inv_t;
        out.surrogate_sum += term.contribution;
        out.kl_sum += term.kl;
      }
    }
  }
  out.value = (out.surrogate_sum - config.kl_beta * out.kl_sum) * inv_t;
  return out;
}

}  // namespace memagent
