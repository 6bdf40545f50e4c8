#include "memagent/generators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "memagent/jsonl.hpp"
#include "memagent/rng.hpp"

namespace memagent {
namespace {

constexpr std::array<std::string_view, 5> kNoise = {
    "The grass is green.", "The sky is blue.", "The sun is yellow.", "Here we go.",
    "There and back again."};

constexpr std::array<std::string_view, 30> kNouns = {
    "startup", "founder", "investor", "idea",    "market",   "product", "city",    "essay",
    "problem", "question", "school",  "writer",  "program",  "language", "company", "customer",
    "friend",  "teacher",  "book",    "system",  "habit",    "project", "painting", "river",
    "garden",  "machine",  "theory",  "student", "library",  "museum"};
constexpr std::array<std::string_view, 20> kAdjectives = {
    "curious", "ambitious", "quiet",  "practical", "unusual", "simple",  "difficult",
    "valuable", "obvious",  "subtle", "patient",   "careful", "bold",    "strange",
    "modest",  "generous",  "narrow", "broad",     "honest",  "stubborn"};
constexpr std::array<std::string_view, 15> kVerbs = {
    "change", "grow",  "fail",    "succeed",  "wander", "learn",   "persist", "collapse",
    "improve", "matter", "surprise", "drift", "compete", "adapt", "struggle"};
constexpr std::array<std::string_view, 10> kAdverbs = {
    "slowly", "quickly", "rarely", "often", "quietly", "suddenly", "gradually", "eventually",
    "usually", "seldom"};
constexpr std::array<std::string_view, 12> kFunctionWords = {
    "and", "of", "in", "with", "for", "to", "from", "over", "under", "between", "about", "near"};

// Key vocabulary; disjoint from the filler vocabulary above.
constexpr std::array<std::string_view, 40> kKeyAdjectives = {
    "amber",   "brisk",   "crimson", "dusty",   "eager",   "fierce",  "gentle",  "hollow",
    "icy",     "jolly",   "keen",    "lively",  "mellow",  "nimble",  "olive",   "proud",
    "rapid",   "silent",  "tender",  "upbeat",  "vivid",   "wary",    "young",   "zesty",
    "ancient", "bright",  "cosmic",  "dapper",  "elegant", "frosty",  "golden",  "hidden",
    "ivory",   "jagged",  "kindly",  "lunar",   "misty",   "noble",   "orange",  "plucky"};
constexpr std::array<std::string_view, 40> kKeyNouns = {
    "anchor",  "badger",  "canyon",  "dolphin", "ember",   "falcon",  "glacier", "harbor",
    "island",  "jungle",  "kettle",  "lantern", "meadow",  "nebula",  "orchard", "pepper",
    "quartz",  "raven",   "saddle",  "thunder", "umbrella", "violin", "walrus",  "yacht",
    "zephyr",  "acorn",   "beacon",  "cobra",   "dune",    "eclipse", "fjord",   "grotto",
    "hammock", "igloo",   "jasmine", "koala",   "lagoon",  "marble",  "nectar",  "otter"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
  return words[rng.below(N)];
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string essay_sentence(Rng& rng) {
  const auto n1 = std::string(pick(rng, kNouns));
  const auto n2 = std::string(pick(rng, kNouns));
  const auto a1 = std::string(pick(rng, kAdjectives));
  const auto a2 = std::string(pick(rng, kAdjectives));
  const auto a3 = std::string(pick(rng, kAdjectives));
  const auto v = std::string(pick(rng, kVerbs));
  const auto adv = std::string(pick(rng, kAdverbs));
  switch (rng.below(8)) {
    case 0: return "The " + a1 + " " + n1 + " " + adv + " tends to " + v + " when nobody is watching.";
    case 1: return "Most people assume that a " + n1 + " must " + v + ", but the " + a1 + " ones " + adv + " do not.";
    case 2: return "If you want to understand a " + n1 + ", look at how its " + n2 + " " + v + "s over time.";
    case 3: return "A " + a1 + " " + n1 + " is " + adv + " more " + a2 + " than a " + a3 + " " + n2 + ".";
    case 4: return "What makes a " + n1 + " " + a1 + " is not the " + n2 + " but the way it is used.";
    case 5: return "In the long run, every " + n1 + " will " + v + " unless its " + n2 + " stays " + a1 + ".";
    case 6: return "There is something " + a1 + " about a " + n1 + " that " + adv + " " + v + "s.";
    default: return "We learned that the " + n1 + " and the " + n2 + " " + adv + " " + v + " together.";
  }
}

std::string word_salad_sentence(Rng& rng) {
  const auto len = rng.between(6, 14);
  std::string s;
  for (std::uint64_t i = 0; i < len; ++i) {
    std::string_view w;
    switch (rng.below(5)) {
      case 0: w = pick(rng, kNouns); break;
      case 1: w = pick(rng, kAdjectives); break;
      case 2: w = pick(rng, kVerbs); break;
      case 3: w = pick(rng, kAdverbs); break;
      default: w = pick(rng, kFunctionWords); break;
    }
    if (!s.empty()) s.push_back(' ');
    s += w;
  }
  return capitalize(std::move(s)) + ".";
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n' || c == '\r' || c == '\t') {
      if (!cur.empty() && cur.back() != ' ') cur.push_back(' ');
      continue;
    }
    if (c == ' ' && (cur.empty() || cur.back() == ' ')) continue;
    cur.push_back(c);
    const bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n')) {
      out.push_back(cur);
      cur.clear();
    }
  }
  while (!cur.empty() && cur.back() == ' ') cur.pop_back();
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Deterministic stream of filler sentences.
class FillerStream {
 public:
  FillerStream(const HaystackSource& source, std::uint64_t seed)
      : kind_(source.kind), rng_(seed) {
    if (kind_ == HaystackKind::corpus) {
      corpus_ = split_sentences(source.corpus_text);
      if (corpus_.empty()) throw std::invalid_argument("corpus haystack has no sentences");
      cursor_ = rng_.below(corpus_.size());
    }
  }

  std::string next() {
    switch (kind_) {
      case HaystackKind::noise: return std::string(kNoise[cursor_++ % kNoise.size()]);
      case HaystackKind::essay: return essay_sentence(rng_);
      case HaystackKind::words: return word_salad_sentence(rng_);
      case HaystackKind::corpus: return corpus_[cursor_++ % corpus_.size()];
    }
    return {};
  }

 private:
  HaystackKind kind_;
  Rng rng_;
  std::vector<std::string> corpus_;
  std::size_t cursor_ = 0;
};

struct Assembled {
  std::string context;
  std::vector<std::size_t> needle_offsets;  // parallel to the input needles
};

// Places `needles` (kept in the given order) at seeded slots among `n_fill`
// filler sentences.
Assembled assemble(const HaystackSource& source, const std::vector<std::string>& needles,
                   std::size_t n_fill, std::uint64_t seed) {
  FillerStream filler(source, mix_seed(seed, "filler"));
  Rng slot_rng(mix_seed(seed, "slots"));
  std::vector<std::size_t> slots(needles.size());
  for (auto& s : slots) s = slot_rng.below(n_fill + 1);
  std::sort(slots.begin(), slots.end());

  Assembled out;
  out.needle_offsets.resize(needles.size());
  std::size_t next_needle = 0;
  auto append = [&](std::string_view sentence) {
    if (!out.context.empty()) out.context.push_back(' ');
    out.context.append(sentence);
  };
  for (std::size_t i = 0; i <= n_fill; ++i) {
    while (next_needle < needles.size() && slots[next_needle] == i) {
      if (!out.context.empty()) out.context.push_back(' ');
      out.needle_offsets[next_needle] = out.context.size();
      out.context.append(needles[next_needle]);
      ++next_needle;
    }
    if (i < n_fill) append(filler.next());
  }
  return out;
}

void check_length(std::size_t actual, std::size_t target) {
  const double rel = std::abs(static_cast<double>(actual) - static_cast<double>(target)) /
                     static_cast<double>(target);
  if (rel > kLengthTolerance) {
    throw std::runtime_error("generated " + std::to_string(actual) + " tokens for target " +
                             std::to_string(target) + " (outside tolerance)");
  }
}

// Chooses the filler sentence count whose assembled context is closest to
// `target` tokens.
Assembled assemble_to_target(const HaystackSource& source, const std::vector<std::string>& needles,
                             std::size_t target, std::uint64_t seed, const TokenCounter& counter,
                             std::size_t& actual_tokens) {
  if (target < kMinTargetTokens)
    throw std::invalid_argument("target_tokens must be at least " + std::to_string(kMinTargetTokens));
  std::size_t needle_tokens = 0;
  for (const auto& n : needles) needle_tokens += counter.count(n);
  if (static_cast<double>(needle_tokens) > static_cast<double>(target) * (1.0 - kLengthTolerance))
    throw std::invalid_argument("target_tokens " + std::to_string(target) +
                                " too small to hold " + std::to_string(needles.size()) +
                                " needles (" + std::to_string(needle_tokens) + " tokens)");

  FillerStream probe(source, mix_seed(seed, "filler"));
  std::string sample;
  constexpr std::size_t kProbe = 64;
  for (std::size_t i = 0; i < kProbe; ++i) sample += probe.next() + " ";
  const double per_sentence =
      std::max(1.0, static_cast<double>(counter.count(sample)) / static_cast<double>(kProbe));

  auto n_fill = static_cast<std::size_t>(
      std::max(0.0, std::round(static_cast<double>(target - needle_tokens) / per_sentence)));
  Assembled best;
  std::size_t best_err = SIZE_MAX;
  std::set<std::size_t> tried;
  for (int iter = 0; iter < 12 && !tried.count(n_fill); ++iter) {
    tried.insert(n_fill);
    Assembled a = assemble(source, needles, n_fill, seed);
    const std::size_t actual = counter.count(a.context);
    const std::size_t err = actual > target ? actual - target : target - actual;
    if (err < best_err) {
      best_err = err;
      best = std::move(a);
      actual_tokens = actual;
    }
    if (err == 0) break;
    const double step = (static_cast<double>(target) - static_cast<double>(actual)) / per_sentence;
    long long delta = std::llround(step);
    if (delta == 0) delta = actual < target ? 1 : -1;
    if (delta < 0 && static_cast<std::size_t>(-delta) > n_fill) break;
    n_fill = static_cast<std::size_t>(static_cast<long long>(n_fill) + delta);
  }
  check_length(actual_tokens, target);
  return best;
}

std::string make_instance_id(std::string_view family, std::size_t target, std::uint64_t seed) {
  return std::string(family) + "-" + std::to_string(target) + "-" + std::to_string(seed);
}

std::string join_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i > 0) out += (i + 1 == keys.size()) ? " and " : ", ";
    out += keys[i];
  }
  return out;
}

}  // namespace

std::string to_string(HaystackKind kind) {
  switch (kind) {
    case HaystackKind::noise: return "noise";
    case HaystackKind::essay: return "essay";
    case HaystackKind::words: return "words";
    case HaystackKind::corpus: return "corpus";
  }
  return "essay";
}

HaystackKind haystack_kind_from_string(std::string_view name) {
  if (name == "noise") return HaystackKind::noise;
  if (name == "essay") return HaystackKind::essay;
  if (name == "words") return HaystackKind::words;
  if (name == "corpus") return HaystackKind::corpus;
  throw std::invalid_argument("unknown haystack kind: " + std::string(name));
}

NiahSpec NiahSpec::preset(TaskFamily family, std::size_t target_tokens) {
  NiahSpec s;
  s.family = family;
  s.target_tokens = target_tokens;
  switch (family) {
    case TaskFamily::niah_single_1: s.haystack.kind = HaystackKind::noise; break;
    case TaskFamily::niah_single_2: s.haystack.kind = HaystackKind::essay; break;
    case TaskFamily::niah_single_3: s.haystack.kind = HaystackKind::words; break;
    case TaskFamily::niah_multikey_1: s.num_distractor_needles = 3; break;
    case TaskFamily::niah_multikey_2: s.num_distractor_needles = 15; break;
    case TaskFamily::niah_multikey_3:
      s.haystack.kind = HaystackKind::words;
      s.num_distractor_needles = 63;
      break;
    case TaskFamily::niah_multiquery:
    case TaskFamily::niah_multivalue: s.num_queries_or_values = 4; break;
    default: throw std::invalid_argument("not a NIAH family: " + to_string(family));
  }
  return s;
}

TaskInstance gen_niah(const NiahSpec& spec, std::uint64_t seed, const TokenCounter& counter) {
  if (!is_niah(spec.family)) throw std::invalid_argument("not a NIAH family: " + to_string(spec.family));
  const bool multiquery = spec.family == TaskFamily::niah_multiquery;
  const bool multivalue = spec.family == TaskFamily::niah_multivalue;
  const std::size_t queried = multiquery ? std::max<std::size_t>(1, spec.num_queries_or_values) : 1;
  const std::size_t values_per_key = multivalue ? std::max<std::size_t>(1, spec.num_queries_or_values) : 1;
  const std::size_t n_keys = queried + spec.num_distractor_needles;

  Rng rng(mix_seed(seed, "niah-keys"));
  std::vector<std::string> keys;
  std::set<std::string> seen_keys;
  const std::size_t max_tries = 100 * n_keys + 100;
  for (std::size_t tries = 0; keys.size() < n_keys; ++tries) {
    if (tries >= max_tries)
      throw std::runtime_error("could not generate " + std::to_string(n_keys) + " distinct keys");
    std::string key = std::string(pick(rng, kKeyAdjectives)) + "-" + std::string(pick(rng, kKeyNouns));
    if (seen_keys.insert(key).second) keys.push_back(std::move(key));
  }

  std::set<std::uint64_t> seen_values;
  auto fresh_value = [&] {
    for (;;) {
      const auto v = rng.between(1000000, 9999999);
      if (seen_values.insert(v).second) return std::to_string(v);
    }
  };

  struct Needle {
    std::string text;
    bool golden;
    std::string value;
  };
  std::vector<Needle> needles;
  for (std::size_t k = 0; k < n_keys; ++k) {
    const bool golden = k < queried;
    const std::size_t nvals = golden ? values_per_key : 1;
    for (std::size_t v = 0; v < nvals; ++v) {
      auto value = fresh_value();
      needles.push_back({"One of the special magic numbers for " + keys[k] + " is: " + value + ".",
                         golden, value});
    }
  }
  rng.shuffle(needles);

  std::vector<std::string> texts;
  for (const auto& n : needles) texts.push_back(n.text);
  std::size_t actual = 0;
  Assembled a = assemble_to_target(spec.haystack, texts, spec.target_tokens, seed, counter, actual);

  TaskInstance t;
  t.family = spec.family;
  t.instance_id = make_instance_id(to_string(spec.family), spec.target_tokens, seed);
  t.context = std::move(a.context);
  t.target_token_count = spec.target_tokens;
  t.length_bucket = spec.target_tokens;
  t.answers.mode = answer_mode_for(spec.family);
  // Answers follow key order so multi-query answers line up with the question.
  std::vector<std::string> queried_keys(keys.begin(), keys.begin() + static_cast<long>(queried));
  for (const auto& key : queried_keys) {
    for (std::size_t i = 0; i < needles.size(); ++i) {
      if (needles[i].golden && needles[i].text.find(" for " + key + " is: ") != std::string::npos) {
        t.answers.answers.push_back(needles[i].value);
        t.golden_positions.push_back(a.needle_offsets[i]);
      }
    }
  }
  std::sort(t.golden_positions.begin(), t.golden_positions.end());
  if (multiquery) {
    t.question = "What are all the special magic numbers for " + join_keys(queried_keys) +
                 " mentioned in the provided text?";
  } else if (multivalue) {
    t.question = "What are all the special magic numbers for " + keys[0] +
                 " mentioned in the provided text?";
  } else {
    t.question = "What is the special magic number for " + keys[0] + " mentioned in the provided text?";
  }
  return t;
}

TaskInstance gen_variable_tracking(std::size_t chain_length, std::size_t num_chains,
                                   std::size_t target_tokens, std::uint64_t seed,
                                   const TokenCounter& counter) {
  if (chain_length < 1) throw std::invalid_argument("chain_length must be >= 1");
  if (num_chains < 1) throw std::invalid_argument("num_chains must be >= 1");
  Rng rng(mix_seed(seed, "vt"));
  std::set<std::string> names_seen;
  auto fresh_name = [&] {
    for (;;) {
      std::string name(5, 'A');
      for (auto& c : name) c = static_cast<char>('A' + rng.below(26));
      if (names_seen.insert(name).second) return name;
    }
  };
  std::set<std::uint64_t> values_seen;

  std::vector<std::vector<std::string>> chain_names(num_chains);
  std::vector<std::vector<std::string>> chain_statements(num_chains);
  std::vector<std::string> root_values;
  for (std::size_t c = 0; c < num_chains; ++c) {
    std::uint64_t v;
    do {
      v = rng.between(10000, 99999);
    } while (!values_seen.insert(v).second);
    root_values.push_back(std::to_string(v));
    std::string prev = root_values.back();
    for (std::size_t h = 0; h < chain_length; ++h) {
      auto name = fresh_name();
      chain_statements[c].push_back("VAR " + name + " = " + prev + ".");
      chain_names[c].push_back(name);
      prev = name;
    }
  }

  // Interleave chains while keeping each chain in assignment order.
  std::vector<std::size_t> chain_order;
  for (std::size_t c = 0; c < num_chains; ++c)
    for (std::size_t h = 0; h < chain_length; ++h) chain_order.push_back(c);
  rng.shuffle(chain_order);
  std::vector<std::string> statements;
  std::vector<std::size_t> statement_chain;
  std::vector<std::size_t> cursor(num_chains, 0);
  for (auto c : chain_order) {
    statements.push_back(chain_statements[c][cursor[c]++]);
    statement_chain.push_back(c);
  }

  std::size_t actual = 0;
  Assembled a = assemble_to_target(HaystackSource{HaystackKind::noise, {}}, statements,
                                   target_tokens, seed, counter, actual);
  TaskInstance t;
  t.family = TaskFamily::variable_tracking;
  t.instance_id = make_instance_id("variable_tracking", target_tokens, seed);
  t.context = std::move(a.context);
  t.question = "Find all variables that are assigned the value " + root_values[0] +
               " in the text above.";
  t.answers = AnswerSet{chain_names[0], AnswerMode::all_of};
  t.target_token_count = target_tokens;
  t.length_bucket = target_tokens;
  for (std::size_t i = 0; i < statements.size(); ++i)
    if (statement_chain[i] == 0) t.golden_positions.push_back(a.needle_offsets[i]);
  return t;
}

TaskInstance gen_freq_words(double alpha, std::size_t vocab_size, std::size_t num_tokens,
                            std::size_t top_k, std::uint64_t seed, const TokenCounter& counter) {
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
  if (top_k == 0 || top_k >= vocab_size) throw std::invalid_argument("need 0 < top_k < vocab_size");
  if (num_tokens < top_k) throw std::invalid_argument("num_tokens must be >= top_k");

  Rng vocab_rng(mix_seed(seed, "fwe-vocab"));
  std::vector<std::string> vocab;
  std::set<std::string> seen;
  while (vocab.size() < vocab_size) {
    const auto len = vocab_rng.between(4, 8);
    std::string w(len, 'a');
    for (auto& c : w) c = static_cast<char>('a' + vocab_rng.below(26));
    if (seen.insert(w).second) vocab.push_back(std::move(w));
  }
  std::vector<double> cdf(vocab_size);
  double total = 0.0;
  for (std::size_t r = 0; r < vocab_size; ++r) {
    total += std::pow(static_cast<double>(r + 1), -alpha);
    cdf[r] = total;
  }
  for (auto& c : cdf) c /= total;

  // Average token cost of one "word " unit under this counter.
  std::string probe;
  for (std::size_t i = 0; i < std::min<std::size_t>(vocab_size, 256); ++i) probe += vocab[i] + " ";
  const double per_word = std::max(
      1e-9, static_cast<double>(counter.count(probe)) /
                static_cast<double>(std::min<std::size_t>(vocab_size, 256)));

  constexpr int kMaxAttempts = 32;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto sample_seed = mix_seed(seed, "fwe-sample", static_cast<std::uint64_t>(attempt));
    auto n_words = static_cast<std::size_t>(std::llround(static_cast<double>(num_tokens) / per_word));
    std::string context;
    std::vector<std::size_t> counts;
    std::size_t actual = 0;
    std::set<std::size_t> tried;
    for (int iter = 0; iter < 8 && !tried.count(n_words); ++iter) {
      tried.insert(n_words);
      Rng rng(sample_seed);
      counts.assign(vocab_size, 0);
      context.clear();
      for (std::size_t i = 0; i < n_words; ++i) {
        const double u = rng.uniform();
        const auto r = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const auto rank = std::min(r, vocab_size - 1);
        ++counts[rank];
        if (!context.empty()) context.push_back(' ');
        context += vocab[rank];
      }
      actual = counter.count(context);
      if (actual == num_tokens) break;
      long long delta = std::llround((static_cast<double>(num_tokens) - static_cast<double>(actual)) / per_word);
      if (delta == 0) break;
      n_words = static_cast<std::size_t>(std::max<long long>(1, static_cast<long long>(n_words) + delta));
    }
    check_length(actual, num_tokens);

    std::vector<std::size_t> order(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    if (counts[order[top_k - 1]] <= counts[order[top_k]]) continue;  // ambiguous top-k

    TaskInstance t;
    t.family = TaskFamily::freq_words;
    t.instance_id = make_instance_id("freq_words", num_tokens, seed);
    t.context = std::move(context);
    t.question = "What are the " + std::to_string(top_k) +
                 " most frequently appeared words in the above coded text?";
    t.answers.mode = AnswerMode::all_of;
    for (std::size_t i = 0; i < top_k; ++i) t.answers.answers.push_back(vocab[order[i]]);
    t.target_token_count = num_tokens;
    t.length_bucket = num_tokens;
    return t;
  }
  throw std::runtime_error("could not separate the top " + std::to_string(top_k) +
                           " words after " + std::to_string(kMaxAttempts) +
                           " attempts; try a larger num_tokens");
}

std::vector<CorpusArticle> read_corpus(const std::string& path, const TokenCounter& counter) {
  std::vector<CorpusArticle> out;
  for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
    CorpusArticle a;
    a.article_id = j.at("article_id").get<std::string>();
    a.title = j.value("title", std::string{});
    a.text = j.at("text").get<std::string>();
    if (a.text.empty()) throw std::invalid_argument("article text is empty");
    a.token_count = counter.count(a.text);
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<QaQuestion> read_questions(const std::string& path) {
  std::vector<QaQuestion> out;
  for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
    QaQuestion q;
    q.question_id = j.at("question_id").get<std::string>();
    q.question = j.at("question").get<std::string>();
    q.answers = j.at("answers").get<std::vector<std::string>>();
    q.golden_article_ids = j.at("golden_article_ids").get<std::vector<std::string>>();
    AnswerSet{q.answers, AnswerMode::any_of}.validate();
    out.push_back(std::move(q));
  });
  return out;
}

TaskInstance build_qa_haystack(const QaQuestion& question,
                               const std::vector<CorpusArticle>& golden_articles,
                               const std::vector<CorpusArticle>& distractor_pool,
                               std::size_t n_articles, std::uint64_t seed,
                               const TokenCounter& counter) {
  if (n_articles < golden_articles.size())
    throw std::invalid_argument("n_articles smaller than the number of golden articles");

  std::set<std::string> used;
  for (const auto& g : golden_articles) used.insert(g.article_id);
  std::vector<const CorpusArticle*> candidates;
  for (const auto& a : distractor_pool)
    if (used.insert(a.article_id).second) candidates.push_back(&a);

  const std::size_t needed = n_articles - golden_articles.size();
  if (candidates.size() < needed)
    throw std::invalid_argument("distractor pool too small: need " + std::to_string(needed) +
                                " distinct articles, have " + std::to_string(candidates.size()) +
                                " (short by " + std::to_string(needed - candidates.size()) + ")");

  Rng rng(mix_seed(seed, "qa"));
  std::vector<std::pair<const CorpusArticle*, bool>> docs;
  for (const auto& g : golden_articles) docs.emplace_back(&g, true);
  for (auto idx : rng.sample_indices(candidates.size(), needed)) docs.emplace_back(candidates[idx], false);
  rng.shuffle(docs);

  TaskInstance t;
  t.family = TaskFamily::qa_haystack;
  t.instance_id = question.question_id + "-" + std::to_string(n_articles);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i > 0) t.context += "\n\n";
    if (docs[i].second) t.golden_positions.push_back(t.context.size());
    t.context += "Document " + std::to_string(i + 1) + ":\n" + docs[i].first->title + "\n" +
                 docs[i].first->text;
  }
  t.question = question.question;
  t.answers = AnswerSet{question.answers, AnswerMode::any_of};
  t.target_token_count = counter.count(t.context);
  t.length_bucket = n_articles;
  return t;
}

LengthSchedule LengthSchedule::doubling(std::size_t first, std::size_t last) {
  if (first == 0 || last < first) throw std::invalid_argument("invalid doubling range");
  LengthSchedule s;
  for (std::size_t v = first; v <= last; v *= 2) s.values.push_back(v);
  return s;
}

void LengthSchedule::validate() const {
  if (values.empty()) throw std::invalid_argument("length schedule is empty");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1])
      throw std::invalid_argument("length schedule must be strictly increasing");
}

}  // namespace memagent
