#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memagent/dapo.hpp"
#include "memagent/workflow.hpp"

namespace memagent {

struct ScoredEpisode {
  std::string group_id;
  EpisodeTrace trace;
  double reward = 0.0;
  double advantage = 0.0;

  bool operator==(const ScoredEpisode&) const;
};

// Groups traces by sample_id (one group per question, rollouts in
// rollout_index order) and attaches group advantages. rewards[i] belongs to
// traces[i]; a missing reward is an error naming the trace. The group size
// of `config` is replaced by each group's actual size.
std::vector<ScoredEpisode> score_episodes(const std::vector<EpisodeTrace>& traces,
                                          const std::vector<std::optional<double>>& rewards,
                                          const DapoConfig& config);

// One JSONL record per conversation, carrying the episode's reward and
// advantage on every record.
void export_trajectories(const std::string& path, const std::vector<ScoredEpisode>& episodes);
std::vector<ScoredEpisode> import_trajectories(const std::string& path);

}  // namespace memagent
