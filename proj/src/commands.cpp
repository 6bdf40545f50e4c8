#include "memagent/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "memagent/csv.hpp"
#include "memagent/filter.hpp"
#include "memagent/generators.hpp"
#include "memagent/jsonl.hpp"
#include "memagent/manifest.hpp"
#include "memagent/parallel.hpp"
#include "memagent/rng.hpp"
#include "memagent/svg.hpp"
#include "memagent/task.hpp"
#include "memagent/trace_io.hpp"
#include "memagent/trajectory.hpp"
#include "memagent/verifiers.hpp"

namespace memagent {
namespace fs = std::filesystem;

namespace {

std::string dataset_jsonl(const std::vector<TaskInstance>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += jsonl_dump(to_json(t)) + "\n";
  return out;
}

// Strips a known suffix (".jsonl", ".traces.jsonl") from a file name.
std::string stem_of(const std::string& path, const std::string& suffix) {
  auto name = fs::path(path).filename().string();
  if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
    name.resize(name.size() - suffix.size());
  return name;
}

// Starting line of each element of the top-level array under `key`, found by
// a string-aware bracket scan of the raw JSON. Used to put line numbers on
// schema errors, which the parsed tree no longer knows.
std::vector<std::size_t> array_element_lines(const std::string& text, const std::string& key) {
  std::vector<std::size_t> lines;
  std::size_t line = 1, depth = 0;
  bool in_string = false, escaped = false;
  std::string last_string, current;
  std::size_t array_depth = 0;  // depth inside the target array, 0 = not in it
  bool expect_element = false;
  for (char c : text) {
    if (c == '\n') ++line;
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') {
        in_string = false;
        last_string = current;
      } else current += c;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (expect_element && c != ']') {
      lines.push_back(line);
      expect_element = false;
    }
    switch (c) {
      case '"':
        in_string = true;
        current.clear();
        break;
      case '{':
        ++depth;
        break;
      case '[':
        ++depth;
        if (array_depth == 0 && depth == 2 && last_string == key) {
          array_depth = depth;
          expect_element = true;
        }
        break;
      case '}':
        --depth;
        break;
      case ']':
        if (array_depth != 0 && depth == array_depth) {
          array_depth = 0;
          expect_element = false;
        }
        --depth;
        break;
      case ',':
        if (array_depth != 0 && depth == array_depth) expect_element = true;
        break;
      default:
        break;
    }
    if (c != '"' && c != ':') last_string = c == ',' || c == '{' ? std::string{} : last_string;
  }
  return lines;
}

std::vector<std::size_t> size_list(const nlohmann::json& entry, const char* key) {
  if (!entry.contains(key) || !entry[key].is_array() || entry[key].empty())
    throw std::invalid_argument(std::string("'") + key + "' must be a non-empty array of positive integers");
  std::vector<std::size_t> v;
  for (const auto& x : entry[key]) {
    if (!x.is_number_unsigned() || x.get<std::size_t>() == 0)
      throw std::invalid_argument(std::string("'") + key + "' must hold positive integers");
    v.push_back(x.get<std::size_t>());
  }
  return v;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base_dir.empty() ? p : (fs::path(base_dir) / path).string();
}

}  // namespace

TokenCounter counter_from_json(const nlohmann::json& j) {
  if (j.is_null()) return TokenCounter::whitespace();
  if (j.is_string()) {
    const auto mode = counter_mode_from_string(j.get<std::string>());
    if (mode == CounterMode::external_vocab) throw ConfigError("external_vocab needs a vocab path");
    return mode == CounterMode::whitespace ? TokenCounter::whitespace() : TokenCounter::chars_div_4();
  }
  const auto mode = counter_mode_from_string(j.at("mode").get<std::string>());
  if (mode == CounterMode::external_vocab) return TokenCounter::external_vocab(j.at("vocab").get<std::string>());
  return mode == CounterMode::whitespace ? TokenCounter::whitespace() : TokenCounter::chars_div_4();
}

// ---- synth -----------------------------------------------------------------

CommandResult cmd_synth(const std::string& spec_path, const std::string& out_dir,
                        std::optional<std::uint64_t> seed_override) {
  const std::string text = read_file(spec_path);
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(spec_path + ": " + e.what());
  }
  if (!spec.is_object()) throw std::invalid_argument(spec_path + ":1: spec must be a JSON object");
  const auto base_dir = fs::path(spec_path).parent_path().string();
  const std::uint64_t seed = seed_override ? *seed_override : spec.value("seed", std::uint64_t{0});
  const TokenCounter counter = counter_from_json(spec.value("counter", nlohmann::json()));
  const auto element_lines = array_element_lines(text, "families");

  CommandResult result;
  fs::create_directories(out_dir);
  const auto families = spec.value("families", nlohmann::json::array());
  if (!families.is_array()) throw std::invalid_argument(spec_path + ": 'families' must be an array");
  if (families.empty()) result.warnings.push_back("spec lists no families; nothing generated");

  auto manifest = begin_manifest("synth", spec, {{"seed", seed}});
  manifest.inputs[spec_path] = git_blob_sha1(text);

  for (std::size_t f = 0; f < families.size(); ++f) {
    const auto& entry = families[f];
    const auto where = spec_path + ":" +
                       std::to_string(f < element_lines.size() ? element_lines[f] : 1) + ": families[" +
                       std::to_string(f) + "]: ";
    try {
      if (!entry.is_object() || !entry.contains("family") || !entry["family"].is_string())
        throw std::invalid_argument("entry needs a string 'family'");
      const auto family = task_family_from_string(entry["family"].get<std::string>());
      const auto count = entry.value("count", std::size_t{1});
      if (count == 0) throw std::invalid_argument("'count' must be positive");
      const auto fname = to_string(family);

      if (family == TaskFamily::qa_haystack) {
        const auto lengths = size_list(entry, "articles");
        const auto corpus_path = resolve(base_dir, entry.at("corpus").get<std::string>());
        const auto questions_path = resolve(base_dir, entry.at("questions").get<std::string>());
        const auto corpus = read_corpus(corpus_path, counter);
        auto questions = read_questions(questions_path);
        manifest.inputs[corpus_path] = git_blob_sha1_file(corpus_path);
        manifest.inputs[questions_path] = git_blob_sha1_file(questions_path);
        if (questions.size() > count) questions.resize(count);
        std::map<std::string, const CorpusArticle*> by_id;
        for (const auto& a : corpus) by_id[a.article_id] = &a;
        for (auto n : lengths) {
          std::vector<TaskInstance> tasks;
          for (const auto& q : questions) {
            std::vector<CorpusArticle> golden;
            for (const auto& id : q.golden_article_ids) {
              const auto it = by_id.find(id);
              if (it == by_id.end()) throw std::invalid_argument("question " + q.question_id + " names unknown article " + id);
              golden.push_back(*it->second);
            }
            // Same seed per question at every length, so the question set
            // and goldens are shared across the ladder.
            tasks.push_back(build_qa_haystack(q, golden, corpus, n, mix_seed(seed, q.question_id), counter));
          }
          const auto name = fname + "-" + std::to_string(n) + ".jsonl";
          write_file_atomic((fs::path(out_dir) / name).string(), dataset_jsonl(tasks));
          result.outputs.push_back(name);
        }
        continue;
      }

      const auto lengths = size_list(entry, "lengths");
      for (auto len : lengths) {
        std::vector<TaskInstance> tasks(count);
        for (std::size_t i = 0; i < count; ++i) {
          const auto s = mix_seed(seed, fname, i);
          if (is_niah(family)) {
            auto ns = NiahSpec::preset(family, len);
            if (entry.contains("haystack")) ns.haystack.kind = haystack_kind_from_string(entry["haystack"].get<std::string>());
            if (ns.haystack.kind == HaystackKind::corpus) {
              ns.haystack.corpus_text = read_file(resolve(base_dir, entry.at("haystack_file").get<std::string>()));
            }
            ns.num_distractor_needles = entry.value("num_distractors", ns.num_distractor_needles);
            ns.num_queries_or_values = entry.value("num_values", ns.num_queries_or_values);
            tasks[i] = gen_niah(ns, s, counter);
          } else if (family == TaskFamily::variable_tracking) {
            tasks[i] = gen_variable_tracking(entry.value("chain_length", std::size_t{5}),
                                             entry.value("num_chains", std::size_t{2}), len, s, counter);
          } else {
            tasks[i] = gen_freq_words(entry.value("alpha", 2.0), entry.value("vocab_size", std::size_t{1000}), len,
                                      entry.value("top_k", std::size_t{3}), s, counter);
          }
        }
        const auto name = fname + "-" + std::to_string(len) + ".jsonl";
        write_file_atomic((fs::path(out_dir) / name).string(), dataset_jsonl(tasks));
        result.outputs.push_back(name);
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  result.manifest_path = finish_manifest(manifest, out_dir, result.outputs);
  return result;
}

// ---- filter ----------------------------------------------------------------

CommandResult cmd_filter(const FilterOptions& o) {
  if (!o.gateway) throw std::invalid_argument("filter needs a gateway");
  const auto samples = read_dataset(o.dataset);
  auto manifest = begin_manifest("filter", o.config_snapshot, {});
  manifest.inputs[o.dataset] = git_blob_sha1_file(o.dataset);
  const auto outcome = filter_known_questions(samples, *o.gateway, default_verifier, o.attempts);

  fs::create_directories(o.out_dir);
  write_file_atomic((fs::path(o.out_dir) / "kept.jsonl").string(), dataset_jsonl(outcome.kept));
  write_file_atomic((fs::path(o.out_dir) / "dropped.jsonl").string(), dataset_jsonl(outcome.dropped));
  const nlohmann::json report{{"total", samples.size()},
                              {"kept", outcome.kept.size()},
                              {"dropped", outcome.dropped.size()},
                              {"unfiltered", outcome.unfiltered},
                              {"drop_rate", outcome.drop_rate},
                              {"attempts", o.attempts}};
  write_file_atomic((fs::path(o.out_dir) / "filter_report.json").string(), report.dump(2) + "\n");

  CommandResult r;
  r.outputs = {"kept.jsonl", "dropped.jsonl", "filter_report.json"};
  if (outcome.unfiltered) r.warnings.push_back(std::to_string(outcome.unfiltered) + " samples kept unfiltered after gateway failures");
  r.manifest_path = finish_manifest(manifest, o.out_dir, r.outputs);
  return r;
}

// ---- eval ------------------------------------------------------------------

std::string traces_path_for(const std::string& dataset, const std::string& out_dir) {
  return (fs::path(out_dir) / (stem_of(dataset, ".jsonl") + ".traces.jsonl")).string();
}

CommandResult cmd_eval(const EvalOptions& o, EvalStats* stats_out) {
  if (!o.gateway_for) throw std::invalid_argument("eval needs a gateway");
  if (o.group_size < 1) throw std::invalid_argument("group_size must be >= 1");
  if (o.concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  const auto tasks = read_dataset(o.dataset);
  fs::create_directories(o.out_dir);
  const auto stem = stem_of(o.dataset, ".jsonl");
  const auto traces_name = stem + ".traces.jsonl";
  const auto timings_name = stem + ".timings.jsonl";
  const auto failures_name = stem + ".failures.jsonl";
  const auto traces_path = (fs::path(o.out_dir) / traces_name).string();

  auto manifest = begin_manifest("eval", o.config_snapshot, {{"seed", o.seed}});
  manifest.inputs[o.dataset] = git_blob_sha1_file(o.dataset);

  // Resume: keep every complete trace from an earlier run and rewrite the
  // file without torn or partial episodes before appending.
  using Key = std::pair<std::string, std::size_t>;
  std::map<Key, EpisodeTrace> done;
  if (fs::exists(traces_path)) {
    for (auto& t : read_traces(traces_path))
      if (t.complete()) done.emplace(Key{t.sample_id, static_cast<std::size_t>(t.rollout_index)}, std::move(t));
    std::ostringstream clean;
    for (const auto& [k, t] : done) write_trace(clean, t);
    write_file_atomic(traces_path, clean.str());
  }

  std::vector<std::pair<std::size_t, std::size_t>> todo;  // (task, rollout)
  EvalStats stats;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    for (std::size_t r = 0; r < o.group_size; ++r) {
      if (done.count(Key{tasks[i].instance_id, r})) ++stats.skipped;
      else todo.emplace_back(i, r);
    }
  if (o.max_episodes && todo.size() > o.max_episodes) todo.resize(o.max_episodes);

  std::vector<std::shared_ptr<Gateway>> gateways(o.group_size);
  for (std::size_t r = 0; r < o.group_size; ++r) gateways[r] = o.gateway_for(r);

  std::ofstream traces_out(traces_path, std::ios::binary | std::ios::app);
  std::ofstream timings_out((fs::path(o.out_dir) / timings_name).string(), std::ios::binary | std::ios::app);
  if (!traces_out || !timings_out) throw std::runtime_error("cannot open eval outputs in " + o.out_dir);
  std::mutex out_mu;
  std::vector<nlohmann::json> failures;

  parallel_for(todo.size(), o.concurrency, [&](std::size_t n) {
    const auto [i, r] = todo[n];
    const auto& task = tasks[i];
    EpisodeTrace trace;
    std::string error;
    try {
      trace = run_episode(task, *gateways[r], o.budgets, o.counter, static_cast<int>(r));
      if (trace.error) error = *trace.error;
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(out_mu);
    ++stats.episodes_run;
    if (!error.empty()) {
      failures.push_back({{"instance_id", task.instance_id},
                          {"rollout_index", r},
                          {"error", error},
                          {"completed_turns", trace.conversations.size()}});
      return;
    }
    std::ostringstream buf;
    write_trace(buf, trace);
    traces_out << buf.str();
    traces_out.flush();
    for (const auto& line : timing_lines(trace)) timings_out << jsonl_dump(line) << '\n';
    timings_out.flush();
    done.emplace(Key{trace.sample_id, r}, std::move(trace));
  });
  traces_out.close();
  timings_out.close();

  // Canonical order so the file hash does not depend on scheduling or on
  // how many resumes it took.
  std::map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < tasks.size(); ++i) order.emplace(tasks[i].instance_id, i);
  std::vector<const EpisodeTrace*> sorted;
  for (const auto& [k, t] : done) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [&](const EpisodeTrace* a, const EpisodeTrace* b) {
    const auto ia = order.count(a->sample_id) ? order[a->sample_id] : SIZE_MAX;
    const auto ib = order.count(b->sample_id) ? order[b->sample_id] : SIZE_MAX;
    if (ia != ib) return ia < ib;
    if (a->sample_id != b->sample_id) return a->sample_id < b->sample_id;
    return a->rollout_index < b->rollout_index;
  });
  std::ostringstream canonical;
  for (const auto* t : sorted) write_trace(canonical, *t);
  write_file_atomic(traces_path, canonical.str());

  std::sort(failures.begin(), failures.end(), [&](const nlohmann::json& a, const nlohmann::json& b) {
    const auto ka = std::make_pair(order[a["instance_id"].get<std::string>()], a["rollout_index"].get<std::size_t>());
    const auto kb = std::make_pair(order[b["instance_id"].get<std::string>()], b["rollout_index"].get<std::size_t>());
    return ka < kb;
  });
  std::string failure_text;
  for (const auto& f : failures) failure_text += jsonl_dump(f) + "\n";
  write_file_atomic((fs::path(o.out_dir) / failures_name).string(), failure_text);

  stats.failures = failures.size();
  for (const auto& g : gateways) stats.peak_in_flight = std::max(stats.peak_in_flight, g->peak_in_flight());
  if (stats_out) *stats_out = stats;

  CommandResult res;
  res.outputs = {traces_name, failures_name};  // timings vary run to run and stay out of the hash set
  if (stats.failures) res.warnings.push_back(std::to_string(stats.failures) + " episodes failed; see " + failures_name);
  res.manifest_path = finish_manifest(manifest, o.out_dir, res.outputs, stem);
  return res;
}

// ---- score -----------------------------------------------------------------

CommandResult cmd_score(const ScoreOptions& o) {
  const auto tasks = read_dataset(o.dataset);
  const auto traces = read_traces(o.traces);
  const auto stem = stem_of(o.traces, ".traces.jsonl");
  std::string timings = o.timings;
  if (timings.empty()) {
    const auto sibling = (fs::path(o.traces).parent_path() / (stem + ".timings.jsonl")).string();
    if (fs::exists(sibling)) timings = sibling;
  }

  std::map<std::string, const TaskInstance*> by_id;
  for (const auto& t : tasks) by_id[t.instance_id] = &t;
  std::map<std::pair<std::string, int>, double> wall;  // per episode, latest run wins per turn
  if (!timings.empty()) {
    std::map<std::tuple<std::string, int, std::size_t>, double> per_turn;
    for_each_jsonl(timings, [&](const nlohmann::json& j, std::size_t) {
      per_turn[{j.at("sample_id").get<std::string>(), j.at("rollout_index").get<int>(),
                j.at("turn_index").get<std::size_t>()}] = j.at("wall_clock_ms").get<double>();
    });
    for (const auto& [k, ms] : per_turn) wall[{std::get<0>(k), std::get<1>(k)}] += ms;
  }

  auto manifest = begin_manifest("score", {{"model", o.model_label}}, {});
  manifest.inputs[o.dataset] = git_blob_sha1_file(o.dataset);
  manifest.inputs[o.traces] = git_blob_sha1_file(o.traces);

  struct Agg {
    double score_sum = 0, wall_sum = 0;
    std::size_t n = 0, wall_n = 0;
  };
  std::map<std::pair<std::string, std::size_t>, Agg> agg;  // (family, length)
  std::string scores = csv_row({"instance_id", "rollout_index", "score", "extraction_ok"});
  std::string near = csv_row({"instance_id", "rollout_index", "extracted_answer", "ground_truth"});
  CommandResult res;
  std::set<std::string> seen;

  for (const auto& tr : traces) {
    const auto it = by_id.find(tr.sample_id);
    if (it == by_id.end()) {
      res.warnings.push_back("trace for unknown instance " + tr.sample_id + " ignored");
      continue;
    }
    if (!tr.complete()) {
      res.warnings.push_back("incomplete trace " + tr.sample_id + " ignored");
      continue;
    }
    seen.insert(tr.sample_id);
    const auto& task = *it->second;
    const auto rr = score_completion(tr.final_answer, task.answers);
    scores += csv_row({tr.sample_id, std::to_string(tr.rollout_index), format_double(rr.score),
                       rr.extraction_ok ? "true" : "false"});
    if (rr.near_miss) {
      std::string truth;
      for (const auto& a : task.answers.answers) truth += (truth.empty() ? "" : " | ") + a;
      near += csv_row({tr.sample_id, std::to_string(tr.rollout_index), rr.extracted_answer, truth});
    }
    auto& a = agg[{to_string(task.family), task.length_bucket}];
    a.score_sum += rr.score;
    ++a.n;
    const auto w = wall.find({tr.sample_id, tr.rollout_index});
    if (w != wall.end()) {
      a.wall_sum += w->second;
      ++a.wall_n;
    }
  }
  for (const auto& t : tasks)
    if (!seen.count(t.instance_id)) res.warnings.push_back("no complete trace for " + t.instance_id);

  std::string summary = csv_row({"model", "family", "length", "accuracy", "n_samples", "mean_wall_ms"});
  for (const auto& [k, a] : agg) {
    summary += csv_row({o.model_label, k.first, std::to_string(k.second),
                        format_double(100.0 * a.score_sum / static_cast<double>(a.n)), std::to_string(a.n),
                        a.wall_n ? format_double(a.wall_sum / static_cast<double>(a.wall_n)) : ""});
  }
  fs::create_directories(o.out_dir);
  res.outputs = {stem + ".scores.csv", stem + ".summary.csv", stem + ".near_miss.csv"};
  write_file_atomic((fs::path(o.out_dir) / res.outputs[0]).string(), scores);
  write_file_atomic((fs::path(o.out_dir) / res.outputs[1]).string(), summary);
  write_file_atomic((fs::path(o.out_dir) / res.outputs[2]).string(), near);
  // Summary rows carry wall clock, which is not reproducible; hash only the scores.
  res.manifest_path = finish_manifest(manifest, o.out_dir, {res.outputs[0], res.outputs[2]}, stem);
  return res;
}

// ---- export-traj -----------------------------------------------------------

CommandResult cmd_export_traj(const ExportOptions& o) {
  const auto traces = read_traces(o.traces);
  const auto table = read_csv(o.scores);
  const auto c_id = table.column("instance_id"), c_roll = table.column("rollout_index"),
             c_score = table.column("score");
  std::map<std::pair<std::string, int>, double> score;
  for (const auto& row : table.rows) score[{row[c_id], std::stoi(row[c_roll])}] = std::stod(row[c_score]);

  std::vector<EpisodeTrace> complete;
  std::vector<std::optional<double>> rewards;
  for (const auto& t : traces) {
    if (!t.complete()) throw std::invalid_argument("trace " + t.sample_id + " is incomplete: " + t.error.value_or(""));
    complete.push_back(t);
    const auto it = score.find({t.sample_id, t.rollout_index});
    rewards.push_back(it == score.end() ? std::nullopt : std::optional<double>(it->second));
  }
  auto manifest = begin_manifest("export-traj",
                                 {{"eps_low", o.dapo.eps_low},
                                  {"eps_high", o.dapo.eps_high},
                                  {"normalize_by_std", o.dapo.normalize_by_std}},
                                 {});
  manifest.inputs[o.traces] = git_blob_sha1_file(o.traces);
  manifest.inputs[o.scores] = git_blob_sha1_file(o.scores);
  const auto episodes = score_episodes(complete, rewards, o.dapo);
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  export_trajectories(o.out, episodes);

  CommandResult r;
  r.outputs = {out.filename().string()};
  r.manifest_path = finish_manifest(manifest, out.parent_path().string(), r.outputs, out.stem().string());
  return r;
}

// ---- train-toy -------------------------------------------------------------

CommandResult cmd_train_toy(const ToyConfig& c, const std::string& out_csv) {
  const auto curve = train_toy(c);
  std::string csv = csv_row({"step", "mean_reward", "expected_reward", "objective", "kl"});
  for (const auto& s : curve.steps)
    csv += csv_row({std::to_string(s.step), format_double(s.mean_reward), format_double(s.expected_reward),
                    format_double(s.objective), format_double(s.kl)});
  const fs::path out(out_csv);
  write_file_atomic(out_csv, csv);
  const nlohmann::json config{{"group_size", c.group_size},
                              {"learning_rate", c.learning_rate},
                              {"steps", c.steps},
                              {"updates_per_rollout", c.updates_per_rollout},
                              {"temperature", c.temperature},
                              {"init_noise", c.init_noise},
                              {"eps_low", c.dapo.eps_low},
                              {"eps_high", c.dapo.eps_high},
                              {"kl_beta", c.dapo.kl_beta},
                              {"normalize_by_std", c.dapo.normalize_by_std}};
  auto manifest = begin_manifest("train-toy", config, {{"seed", c.seed}});
  CommandResult r;
  r.outputs = {out.filename().string()};
  r.manifest_path = finish_manifest(manifest, out.parent_path().string(), r.outputs, out.stem().string());
  return r;
}

// ---- cost ------------------------------------------------------------------

ModelShape shape_from_json(const nlohmann::json& j) {
  ModelShape s;
  s.num_layers = j.value("num_layers", s.num_layers);
  s.hidden_size = j.value("hidden_size", s.hidden_size);
  s.ffn_size = j.value("ffn_size", j.value("intermediate_size", s.ffn_size));
  s.num_attention_heads = j.value("num_attention_heads", s.num_attention_heads);
  s.num_kv_heads = j.value("num_kv_heads", j.value("num_key_value_heads", s.num_kv_heads));
  s.vocab_size = j.value("vocab_size", s.vocab_size);
  s.validate();
  return s;
}

CommandResult cmd_cost(const CostOptions& o) {
  o.shape.validate();
  const auto rows = compare(o.shape, o.q, o.o, o.N, o.grid);
  const fs::path out(o.out_csv);
  write_file_atomic(o.out_csv, cost_csv(rows));
  CommandResult r;
  r.outputs = {out.filename().string()};
  if (!o.out_svg.empty()) {
    write_file_atomic(o.out_svg, cost_svg(rows, "FLOPs vs context length"));
    r.outputs.push_back(fs::relative(o.out_svg, out.parent_path().empty() ? "." : out.parent_path()).string());
  }
  const auto cross = crossover(rows);
  if (cross < 0) r.warnings.push_back("memagent never undercuts the baseline on this grid");
  const nlohmann::json config{{"shape",
                               {{"num_layers", o.shape.num_layers},
                                {"hidden_size", o.shape.hidden_size},
                                {"ffn_size", o.shape.ffn_size},
                                {"num_attention_heads", o.shape.num_attention_heads},
                                {"num_kv_heads", o.shape.num_kv_heads},
                                {"vocab_size", o.shape.vocab_size}}},
                              {"q", o.q},
                              {"o", o.o},
                              {"N", o.N},
                              {"grid", o.grid}};
  auto manifest = begin_manifest("cost", config, {});
  r.manifest_path = finish_manifest(manifest, out.parent_path().string(), r.outputs, out.stem().string());
  return r;
}

// ---- report ----------------------------------------------------------------

Wilson wilson_interval(double p, std::size_t n, double z) {
  if (n == 0) return {0, 1};
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

std::string length_label(std::size_t n) {
  if (n >= 1024 && n % 1024 == 0) {
    const auto k = n / 1024;
    if (k >= 1024 && k % 1024 == 0) return std::to_string(k / 1024) + "M";
    return std::to_string(k) + "K";
  }
  return std::to_string(n);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

CommandResult cmd_report(const std::vector<std::string>& summary_csvs, const std::string& out_md,
                         const std::string& out_svg) {
  if (summary_csvs.empty()) throw std::invalid_argument("report needs at least one summary CSV");
  struct Cell {
    double accuracy = 0;
    std::size_t n = 0;
  };
  // family -> model -> length -> cell
  std::map<std::string, std::map<std::string, std::map<std::size_t, Cell>>> data;
  std::vector<std::string> model_order;
  for (const auto& path : summary_csvs) {
    const auto t = read_csv(path);
    const auto cm = t.column("model"), cf = t.column("family"), cl = t.column("length"),
               ca = t.column("accuracy"), cn = t.column("n_samples");
    for (const auto& row : t.rows) {
      if (std::find(model_order.begin(), model_order.end(), row[cm]) == model_order.end())
        model_order.push_back(row[cm]);
      data[row[cf]][row[cm]][std::stoull(row[cl])] = {std::stod(row[ca]), std::stoull(row[cn])};
    }
  }

  CommandResult r;
  std::string md = "# Accuracy report\n\nAll values are accuracy (%).\n";
  std::vector<ChartSeries> series;
  for (const auto& [family, models] : data) {
    std::set<std::size_t> lengths;
    for (const auto& [m, cells] : models)
      for (const auto& [len, c] : cells) lengths.insert(len);
    for (const auto& [m, cells] : models)
      if (cells.size() != lengths.size())
        r.warnings.push_back(family + ": model " + m + " is missing some lengths; cells left blank");

    std::string header = "| Model |", rule = "|---|";
    for (auto len : lengths) {
      header += " " + length_label(len) + " |";
      rule += "---:|";
    }
    std::string table = header + "\n" + rule + "\n", ci = table;
    for (const auto& m : model_order) {
      const auto mit = models.find(m);
      if (mit == models.end()) continue;
      table += "| " + m + " |";
      ci += "| " + m + " |";
      ChartSeries s{data.size() > 1 ? m + " / " + family : m, {}, {}};
      for (auto len : lengths) {
        const auto cit = mit->second.find(len);
        if (cit == mit->second.end()) {
          table += " |";
          ci += " |";
          s.x.push_back(static_cast<double>(len));
          s.y.push_back(NAN);
          continue;
        }
        const auto w = wilson_interval(cit->second.accuracy / 100.0, cit->second.n);
        table += " " + fixed2(cit->second.accuracy) + " |";
        ci += " " + fixed2(100 * w.lo) + " to " + fixed2(100 * w.hi) + " (n=" + std::to_string(cit->second.n) + ") |";
        s.x.push_back(static_cast<double>(len));
        s.y.push_back(cit->second.accuracy);
      }
      table += "\n";
      ci += "\n";
      series.push_back(std::move(s));
    }
    md += "\n## " + family + "\n\n" + table + "\n95% Wilson intervals:\n\n" + ci;
  }
  if (!r.warnings.empty()) {
    md += "\n## Warnings\n\n";
    for (const auto& w : r.warnings) md += "- " + w + "\n";
  }
  write_file_atomic(out_md, md);
  ChartSpec spec;
  spec.title = "Accuracy vs context length";
  spec.x_label = "context length";
  spec.y_label = "accuracy (%)";
  spec.log_x = true;
  write_file_atomic(out_svg, render_line_chart(spec, series));

  const fs::path md_path(out_md);
  const auto dir = md_path.parent_path();
  r.outputs = {md_path.filename().string(), fs::relative(out_svg, dir.empty() ? "." : dir).string()};
  auto manifest = begin_manifest("report", {{"inputs", summary_csvs}}, {});
  for (const auto& p : summary_csvs) manifest.inputs[p] = git_blob_sha1_file(p);
  r.manifest_path = finish_manifest(manifest, dir.string(), r.outputs, md_path.stem().string());
  return r;
}

}  // namespace memagent
