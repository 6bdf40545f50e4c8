#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memagent/task.hpp"
#include "memagent/token_counter.hpp"

namespace memagent {

// Filler text surrounding the needles.
enum class HaystackKind {
  noise,   // the repeated "The grass is green. ..." sentences
  essay,   // seeded essay-like prose
  words,   // seeded word salad
  corpus,  // sentences cycled from user-supplied text
};

std::string to_string(HaystackKind kind);
HaystackKind haystack_kind_from_string(std::string_view name);

struct HaystackSource {
  HaystackKind kind = HaystackKind::essay;
  std::string corpus_text;  // used by HaystackKind::corpus
};

struct NiahSpec {
  TaskFamily family = TaskFamily::niah_single_1;
  HaystackSource haystack;
  std::size_t num_distractor_needles = 0;
  // Number of queried keys (multiquery) or values per key (multivalue);
  // ignored by the single / multikey families.
  std::size_t num_queries_or_values = 1;
  std::size_t target_tokens = 8192;

  static NiahSpec preset(TaskFamily family, std::size_t target_tokens);
};

inline constexpr std::size_t kMinTargetTokens = 256;
inline constexpr double kLengthTolerance = 0.02;

// Needles read "One of the special magic numbers for {key} is: {value}."
// with word-pair keys and 7-digit values, inserted at seeded positions.
TaskInstance gen_niah(const NiahSpec& spec, std::uint64_t seed, const TokenCounter& counter);

// num_chains counts the queried chain plus the decoys.
TaskInstance gen_variable_tracking(std::size_t chain_length, std::size_t num_chains,
                                   std::size_t target_tokens, std::uint64_t seed,
                                   const TokenCounter& counter);

TaskInstance gen_freq_words(double alpha, std::size_t vocab_size, std::size_t num_tokens,
                            std::size_t top_k, std::uint64_t seed, const TokenCounter& counter);

struct CorpusArticle {
  std::string article_id;
  std::string title;
  std::string text;
  std::size_t token_count = 0;
};

struct QaQuestion {
  std::string question_id;
  std::string question;
  std::vector<std::string> answers;
  std::vector<std::string> golden_article_ids;
};

// Corpus JSONL: {"article_id", "title", "text"} per line.
std::vector<CorpusArticle> read_corpus(const std::string& path, const TokenCounter& counter);
// Questions JSONL: {"question_id", "question", "answers", "golden_article_ids"}.
std::vector<QaQuestion> read_questions(const std::string& path);

// Articles render as "Document {i}:\n{title}\n{text}" separated by blank lines.
TaskInstance build_qa_haystack(const QaQuestion& question,
                               const std::vector<CorpusArticle>& golden_articles,
                               const std::vector<CorpusArticle>& distractor_pool,
                               std::size_t n_articles, std::uint64_t seed,
                               const TokenCounter& counter);

struct LengthSchedule {
  std::vector<std::size_t> values;

  // first, 2*first, ... up to and including last.
  static LengthSchedule doubling(std::size_t first, std::size_t last);
  static LengthSchedule qa_articles() { return doubling(50, 6400); }
  static LengthSchedule ruler_tokens() { return doubling(8192, 524288); }
  void validate() const;
};

}  // namespace memagent
