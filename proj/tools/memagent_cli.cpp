#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>

#include "memagent/commands.hpp"
#include "memagent/http_gateway.hpp"
#include "memagent/manifest.hpp"
#include "memagent/mock_gateway.hpp"
#include "memagent/rng.hpp"

using namespace memagent;
namespace fs = std::filesystem;

namespace {

struct GatewayFlags {
  std::string endpoint;  // JSON endpoint config file
  std::string mock;      // mock behavior spec
  std::size_t concurrency = 8;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    auto* e = app->add_option("--endpoint", endpoint, "endpoint config JSON (API key read from its api_key_env)");
    auto* m = app->add_option("--mock", mock, "mock behavior, e.g. perfect_extractor or lossy:0.3");
    e->excludes(m);
    app->add_option("--concurrency", concurrency, "max requests in flight")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "top-level seed");
  }

  void require() const {
    if (endpoint.empty() && mock.empty()) throw CLI::ValidationError("one of --endpoint or --mock is required");
  }

  // One gateway per rollout for mocks (seeded by rollout), a shared one for HTTP.
  std::function<std::shared_ptr<Gateway>(std::size_t)> factory() const {
    if (!mock.empty()) {
      const auto spec = mock;
      const auto s = seed;
      const int bound = static_cast<int>(concurrency);
      return [spec, s, bound](std::size_t r) {
        return std::make_shared<MockGateway>(MockScript::parse(spec, mix_seed(s, "rollout", r)), bound);
      };
    }
    auto j = nlohmann::json::parse(read_file(endpoint));
    if (!j.contains("max_in_flight")) j["max_in_flight"] = concurrency;
    auto shared = std::make_shared<HttpGateway>(endpoint_from_json(j));
    return [shared](std::size_t) { return shared; };
  }

  nlohmann::json snapshot() const {
    return {{"endpoint", endpoint}, {"mock", mock}, {"concurrency", concurrency}};
  }
};

void report(const CommandResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& o : r.outputs) std::cout << "wrote " << o << "\n";
  if (!r.manifest_path.empty()) std::cout << "manifest " << r.manifest_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chunked overwrite-memory agent harness: synthesis, evaluation, scoring and RL math"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate datasets from a spec file");
  std::string synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--config", synth_config, "synthesis spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the spec's seed");

  // filter
  auto* filter = app.add_subcommand("filter", "drop questions the model answers without context");
  GatewayFlags filter_gw;
  std::string filter_dataset, filter_out;
  int filter_attempts = 2;
  filter->add_option("--dataset", filter_dataset)->required()->check(CLI::ExistingFile);
  filter->add_option("--out", filter_out, "output directory")->required();
  filter->add_option("--attempts", filter_attempts, "context-free attempts per question")->check(CLI::PositiveNumber);
  filter_gw.add(filter);

  // eval
  auto* eval = app.add_subcommand("eval", "run the memory workflow over datasets");
  GatewayFlags eval_gw;
  std::vector<std::string> eval_datasets;
  std::string eval_out, eval_config, eval_counter = "whitespace", eval_vocab;
  Budgets budgets;
  std::size_t group_size = 1, limit = 0;
  eval->add_option("--dataset", eval_datasets, "dataset JSONL (repeatable)")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_option("--config", eval_config, "JSON with budgets / counter / group_size")->check(CLI::ExistingFile);
  eval->add_option("--counter", eval_counter, "whitespace | chars_div_4 | external_vocab");
  eval->add_option("--vocab", eval_vocab, "vocabulary file for external_vocab");
  eval->add_option("--query-budget", budgets.query);
  eval->add_option("--chunk-budget", budgets.chunk);
  eval->add_option("--memory-budget", budgets.memory);
  eval->add_option("--output-budget", budgets.output);
  eval->add_option("--group-size", group_size, "rollouts per instance")->check(CLI::PositiveNumber);
  eval->add_option("--limit", limit, "stop after this many new episodes");
  eval_gw.add(eval);

  // score
  auto* score = app.add_subcommand("score", "score traces against a dataset");
  ScoreOptions score_opts;
  score->add_option("--traces", score_opts.traces)->required()->check(CLI::ExistingFile);
  score->add_option("--dataset", score_opts.dataset)->required()->check(CLI::ExistingFile);
  score->add_option("--model", score_opts.model_label, "model label for the summary");
  score->add_option("--timings", score_opts.timings, "timings JSONL (default: next to the traces)");
  score->add_option("--out", score_opts.out_dir, "output directory")->required();

  // export-traj
  auto* exp = app.add_subcommand("export-traj", "export scored traces as trainer JSONL");
  ExportOptions export_opts;
  exp->add_option("--traces", export_opts.traces)->required()->check(CLI::ExistingFile);
  exp->add_option("--scores", export_opts.scores, "scores CSV from `score`")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", export_opts.out, "output JSONL")->required();
  exp->add_flag("--grpo", export_opts.dapo.normalize_by_std, "divide advantages by the group std");

  // train-toy
  auto* toy = app.add_subcommand("train-toy", "train the copy-memory toy policy");
  ToyConfig toy_cfg;
  std::string toy_out;
  toy->add_option("--out", toy_out, "learning-curve CSV")->required();
  toy->add_option("--seed", toy_cfg.seed);
  toy->add_option("--lr", toy_cfg.learning_rate);
  toy->add_option("--steps", toy_cfg.steps);
  toy->add_option("--group-size", toy_cfg.group_size);
  toy->add_option("--updates-per-rollout", toy_cfg.updates_per_rollout);
  toy->add_option("--eps-low", toy_cfg.dapo.eps_low);
  toy->add_option("--eps-high", toy_cfg.dapo.eps_high);
  toy->add_option("--kl-beta", toy_cfg.dapo.kl_beta);
  toy->add_flag("--grpo", toy_cfg.dapo.normalize_by_std, "divide advantages by the group std");

  // cost
  auto* cost = app.add_subcommand("cost", "FLOP comparison of full-context vs chunked memory");
  CostOptions cost_opts;
  std::string cost_config;
  cost->add_option("--config", cost_config, "model shape JSON (default Qwen2.5-7B dims)")->check(CLI::ExistingFile);
  cost->add_option("--out", cost_opts.out_csv, "CSV path")->required();
  cost->add_option("--svg", cost_opts.out_svg, "chart path");
  cost->add_option("--q", cost_opts.q);
  cost->add_option("--o", cost_opts.o);
  cost->add_option("--N", cost_opts.N);

  // report
  auto* rep = app.add_subcommand("report", "accuracy table and chart from summary CSVs");
  std::vector<std::string> rep_inputs;
  std::string rep_out, rep_svg;
  rep->add_option("--summary", rep_inputs, "summary CSV (repeatable)")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "Markdown path")->required();
  rep->add_option("--svg", rep_svg, "chart path (default: next to the Markdown)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      report(cmd_synth(synth_config, synth_out, synth_seed));
    } else if (*filter) {
      filter_gw.require();
      FilterOptions o;
      o.dataset = filter_dataset;
      o.out_dir = filter_out;
      o.attempts = filter_attempts;
      o.gateway = filter_gw.factory()(0);
      o.config_snapshot = filter_gw.snapshot();
      report(cmd_filter(o));
    } else if (*eval) {
      eval_gw.require();
      nlohmann::json cfg = nlohmann::json::object();
      if (!eval_config.empty()) cfg = nlohmann::json::parse(read_file(eval_config));
      EvalOptions o;
      o.out_dir = eval_out;
      o.budgets = budgets;
      if (cfg.contains("budgets")) {
        const auto& b = cfg["budgets"];
        // Flags given explicitly win over the file.
        if (eval->count("--query-budget") == 0) o.budgets.query = b.value("query", o.budgets.query);
        if (eval->count("--chunk-budget") == 0) o.budgets.chunk = b.value("chunk", o.budgets.chunk);
        if (eval->count("--memory-budget") == 0) o.budgets.memory = b.value("memory", o.budgets.memory);
        if (eval->count("--output-budget") == 0) o.budgets.output = b.value("output", o.budgets.output);
      }
      nlohmann::json counter_cfg = eval_counter;
      if (eval->count("--counter") == 0 && cfg.contains("counter")) counter_cfg = cfg["counter"];
      else if (eval_counter == "external_vocab") counter_cfg = {{"mode", "external_vocab"}, {"vocab", eval_vocab}};
      o.counter = counter_from_json(counter_cfg);
      o.group_size = eval->count("--group-size") ? group_size : cfg.value("group_size", group_size);
      o.concurrency = eval_gw.concurrency;
      o.max_episodes = limit;
      o.seed = eval_gw.seed;
      o.gateway_for = eval_gw.factory();
      o.config_snapshot = eval_gw.snapshot();
      o.config_snapshot["budgets"] = {{"query", o.budgets.query},
                                      {"chunk", o.budgets.chunk},
                                      {"memory", o.budgets.memory},
                                      {"output", o.budgets.output}};
      o.config_snapshot["counter"] = counter_cfg;
      o.config_snapshot["group_size"] = o.group_size;
      for (const auto& d : eval_datasets) {
        o.dataset = d;
        o.config_snapshot["dataset"] = d;
        EvalStats stats;
        report(cmd_eval(o, &stats));
        std::cout << d << ": ran " << stats.episodes_run << ", skipped " << stats.skipped << ", failed "
                  << stats.failures << ", peak in flight " << stats.peak_in_flight << "\n";
      }
    } else if (*score) {
      report(cmd_score(score_opts));
    } else if (*exp) {
      report(cmd_export_traj(export_opts));
    } else if (*toy) {
      report(cmd_train_toy(toy_cfg, toy_out));
    } else if (*cost) {
      if (!cost_config.empty()) cost_opts.shape = shape_from_json(nlohmann::json::parse(read_file(cost_config)));
      report(cmd_cost(cost_opts));
    } else if (*rep) {
      if (rep_svg.empty()) rep_svg = (fs::path(rep_out).replace_extension(".svg")).string();
      report(cmd_report(rep_inputs, rep_out, rep_svg));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
