#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memagent/cost_model.hpp"
#include "memagent/dapo.hpp"
#include "memagent/gateway.hpp"
#include "memagent/token_counter.hpp"
#include "memagent/toy_policy.hpp"
#include "memagent/workflow.hpp"

namespace memagent {

// Every command returns the files it wrote (relative to its output dir),
// the manifest path and any warnings worth printing.
struct CommandResult {
  std::vector<std::string> outputs;
  std::string manifest_path;
  std::vector<std::string> warnings;
};

// "whitespace", "chars_div_4", or {"mode": "external_vocab", "vocab": path}.
TokenCounter counter_from_json(const nlohmann::json& j);

// ---- synth -----------------------------------------------------------------
// Spec file:
// {
//   "seed": 7, "counter": "whitespace",
//   "families": [
//     {"family": "niah_single_1", "lengths": [8192, 16384], "count": 10},
//     {"family": "variable_tracking", "lengths": [8192], "count": 10,
//      "chain_length": 5, "num_chains": 2},
//     {"family": "freq_words", "lengths": [8192], "count": 10,
//      "alpha": 2.0, "vocab_size": 1000, "top_k": 3},
//     {"family": "qa_haystack", "articles": [50, 100], "count": 100,
//      "corpus": "corpus.jsonl", "questions": "questions.jsonl"}
//   ]
// }
// NIAH entries may also set "haystack", "num_distractors" and "num_values".
// Writes <family>-<length>.jsonl per (family, length). Relative corpus paths
// resolve against the spec file's directory.
CommandResult cmd_synth(const std::string& spec_path, const std::string& out_dir,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

// ---- filter ----------------------------------------------------------------
struct FilterOptions {
  std::string dataset;
  std::string out_dir;
  int attempts = 2;
  std::shared_ptr<Gateway> gateway;
  nlohmann::json config_snapshot = nlohmann::json::object();
};
// kept.jsonl, dropped.jsonl, filter_report.json
CommandResult cmd_filter(const FilterOptions& options);

// ---- eval ------------------------------------------------------------------
struct EvalOptions {
  std::string dataset;
  std::string out_dir;
  Budgets budgets;
  TokenCounter counter;
  std::size_t concurrency = 8;
  std::size_t group_size = 1;  // rollouts per instance
  // Stop after this many new episodes (0 = no limit); used to exercise resume.
  std::size_t max_episodes = 0;
  // Gateway serving a rollout index; may return the same instance for all.
  std::function<std::shared_ptr<Gateway>(std::size_t rollout)> gateway_for;
  std::uint64_t seed = 0;
  nlohmann::json config_snapshot = nlohmann::json::object();
};

struct EvalStats {
  std::size_t episodes_run = 0;
  std::size_t skipped = 0;  // already complete from an earlier run
  std::size_t failures = 0;
  int peak_in_flight = 0;
};

// <stem>.traces.jsonl (sorted by dataset order, then rollout),
// <stem>.timings.jsonl and <stem>.failures.jsonl. Completed
// (instance_id, rollout) pairs found in an existing traces file are skipped.
CommandResult cmd_eval(const EvalOptions& options, EvalStats* stats = nullptr);

std::string traces_path_for(const std::string& dataset, const std::string& out_dir);

// ---- score -----------------------------------------------------------------
struct ScoreOptions {
  std::string traces;
  std::string dataset;
  std::string model_label = "model";
  std::string out_dir;
  std::string timings;  // defaults to the sibling .timings.jsonl when present
};
// <stem>.scores.csv (instance_id, rollout_index, score, extraction_ok),
// <stem>.summary.csv (model, family, length, accuracy, n_samples, mean_wall_ms),
// <stem>.near_miss.csv.
CommandResult cmd_score(const ScoreOptions& options);

// ---- export-traj -----------------------------------------------------------
struct ExportOptions {
  std::string traces;
  std::string scores;  // scores CSV from cmd_score
  std::string out;     // trainer JSONL path
  DapoConfig dapo;
};
CommandResult cmd_export_traj(const ExportOptions& options);

// ---- train-toy -------------------------------------------------------------
// CSV columns: step, mean_reward, expected_reward, objective, kl.
CommandResult cmd_train_toy(const ToyConfig& config, const std::string& out_csv);

// ---- cost ------------------------------------------------------------------
struct CostOptions {
  ModelShape shape;
  std::int64_t q = 1024, o = 1024, N = 5000;
  std::vector<std::int64_t> grid = default_cost_grid();
  std::string out_csv;
  std::string out_svg;  // optional
};
CommandResult cmd_cost(const CostOptions& options);
ModelShape shape_from_json(const nlohmann::json& j);

// ---- report ----------------------------------------------------------------
struct Wilson {
  double lo = 0, hi = 0;
};
// 95% Wilson score interval for a proportion p observed over n trials.
Wilson wilson_interval(double p, std::size_t n, double z = 1.959963984540054);

// Markdown accuracy table (rows = models, columns = lengths, one table per
// family), a CI table, and an accuracy-vs-length SVG with a log length axis.
CommandResult cmd_report(const std::vector<std::string>& summary_csvs, const std::string& out_md,
                         const std::string& out_svg);

}  // namespace memagent
