#include <doctest.h>

#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "memagent/generators.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace memagent;

namespace {

const TokenCounter& wc() {
  static const TokenCounter c = TokenCounter::whitespace();
  return c;
}

bool within_length(std::size_t actual, std::size_t target) {
  return std::fabs(static_cast<double>(actual) - static_cast<double>(target)) <=
         0.02 * static_cast<double>(target);
}

}  // namespace

TEST_CASE("niah presets plant the right number of needles") {
  for (auto family : all_task_families()) {
    if (!is_niah(family)) continue;
    CAPTURE(to_string(family));
    const auto spec = NiahSpec::preset(family, 4096);
    const auto t = gen_niah(spec, 11, wc());
    std::size_t expected = spec.num_distractor_needles + 1;
    if (family == TaskFamily::niah_multiquery) expected = spec.num_distractor_needles + spec.num_queries_or_values;
    if (family == TaskFamily::niah_multivalue) expected = spec.num_distractor_needles + spec.num_queries_or_values;
    CHECK(oracle::count_needles(t.context) == expected);
    CHECK(within_length(wc().count(t.context), 4096));
    for (const auto& a : t.answers.answers) CHECK(t.context.find(a) != std::string::npos);
    for (auto pos : t.golden_positions)
      CHECK(t.context.compare(pos, 36, "One of the special magic numbers for") == 0);
    CHECK(t.answers.mode == answer_mode_for(family));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const auto spec = NiahSpec::preset(TaskFamily::niah_multikey_2, 2048);
  CHECK(gen_niah(spec, 3, wc()) == gen_niah(spec, 3, wc()));
  CHECK(gen_niah(spec, 3, wc()).context != gen_niah(spec, 4, wc()).context);
  CHECK(gen_variable_tracking(4, 3, 2048, 9, wc()) == gen_variable_tracking(4, 3, 2048, 9, wc()));
  CHECK(gen_freq_words(2.0, 200, 2048, 3, 9, wc()) == gen_freq_words(2.0, 200, 2048, 3, 9, wc()));
}

TEST_CASE("length targets hold under every counter") {
  const auto c4 = TokenCounter::chars_div_4();
  for (std::size_t target : {1024u, 8192u}) {
    const auto t = gen_niah(NiahSpec::preset(TaskFamily::niah_single_2, target), 1, c4);
    CHECK(within_length(c4.count(t.context), target));
  }
  CHECK_THROWS(gen_niah(NiahSpec::preset(TaskFamily::niah_single_1, 100), 1, wc()));
  CHECK_THROWS(gen_niah(NiahSpec::preset(TaskFamily::variable_tracking, 4096), 1, wc()));
}

TEST_CASE("variable tracking matches a reachability oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto t = gen_variable_tracking(1 + seed % 5, 1 + seed % 4, 2048, seed, wc());
    const auto root = oracle::vt_root(t.question);
    REQUIRE(!root.empty());
    const auto expect = oracle::reachable_vars(t.context, root);
    const std::set<std::string> got(t.answers.answers.begin(), t.answers.answers.end());
    CHECK(got == expect);
    CHECK(within_length(wc().count(t.context), 2048));
  }
}

TEST_CASE("freq words matches a counting oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = gen_freq_words(2.0, 300, 2048, 3, seed, wc());
    std::map<std::string, std::size_t> counts;
    std::istringstream in(t.context);
    for (std::string w; in >> w;) ++counts[w];
    std::vector<std::pair<std::size_t, std::string>> ranked;
    for (const auto& [w, n] : counts) ranked.emplace_back(n, w);
    std::sort(ranked.rbegin(), ranked.rend());
    REQUIRE(ranked.size() > 3);
    CHECK(ranked[2].first > ranked[3].first);
    const std::set<std::string> expect{ranked[0].second, ranked[1].second, ranked[2].second};
    const std::set<std::string> got(t.answers.answers.begin(), t.answers.answers.end());
    CHECK(got == expect);
    CHECK(within_length(wc().count(t.context), 2048));
  }
  CHECK_THROWS(gen_freq_words(1.0, 300, 2048, 3, 1, wc()));
  CHECK_THROWS(gen_freq_words(2.0, 3, 2048, 3, 1, wc()));
}

TEST_CASE("qa haystack dedups and keeps the golden articles") {
  std::vector<CorpusArticle> pool;
  for (int i = 0; i < 40; ++i)
    pool.push_back({"a" + std::to_string(i), "Title " + std::to_string(i),
                    "Body text for article " + std::to_string(i) + ".", 5});
  const std::vector<CorpusArticle> golden{pool[3], pool[7]};
  QaQuestion q{"q1", "Where?", {"Here"}, {"a3", "a7"}};
  const auto t10 = build_qa_haystack(q, golden, pool, 10, 5, wc());
  const auto t20 = build_qa_haystack(q, golden, pool, 20, 5, wc());
  for (const auto* t : {&t10, &t20}) {
    static const std::regex title_re(R"(Document \d+:\n(Title \d+)\n)");
    std::vector<std::string> titles;
    for (auto it = std::sregex_iterator(t->context.begin(), t->context.end(), title_re);
         it != std::sregex_iterator(); ++it)
      titles.push_back((*it)[1].str());
    CHECK(titles.size() == t->length_bucket);
    CHECK(std::set<std::string>(titles.begin(), titles.end()).size() == titles.size());
    CHECK(t->context.find("Body text for article 3.") != std::string::npos);
    CHECK(t->context.find("Body text for article 7.") != std::string::npos);
    CHECK(t->golden_positions.size() == 2);
  }
  CHECK(t10.question == t20.question);
  CHECK(t10.answers == t20.answers);
  CHECK_THROWS(build_qa_haystack(q, golden, pool, 1, 5, wc()));
  CHECK_THROWS(build_qa_haystack(q, golden, pool, 100, 5, wc()));
}

TEST_CASE("corpus and question files round trip") {
  TempDir dir;
  spit(dir / "corpus.jsonl",
       "{\"article_id\":\"x\",\"title\":\"T\",\"text\":\"one two three\"}\n");
  spit(dir / "questions.jsonl",
       "{\"question_id\":\"q\",\"question\":\"?\",\"answers\":[\"y\"],\"golden_article_ids\":[\"x\"]}\n");
  const auto corpus = read_corpus(dir / "corpus.jsonl", wc());
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].token_count == 3);
  const auto qs = read_questions(dir / "questions.jsonl");
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].golden_article_ids == std::vector<std::string>{"x"});
}

TEST_CASE("dataset json round trip") {
  TempDir dir;
  std::vector<TaskInstance> tasks{gen_niah(NiahSpec::preset(TaskFamily::niah_multivalue, 1024), 2, wc()),
                                  gen_variable_tracking(3, 2, 1024, 2, wc())};
  write_dataset(dir / "d.jsonl", tasks);
  CHECK(read_dataset(dir / "d.jsonl") == tasks);
}

TEST_CASE("length schedules") {
  CHECK(LengthSchedule::qa_articles().values ==
        std::vector<std::size_t>{50, 100, 200, 400, 800, 1600, 3200, 6400});
  CHECK(LengthSchedule::ruler_tokens().values ==
        std::vector<std::size_t>{8192, 16384, 32768, 65536, 131072, 262144, 524288});
  CHECK_THROWS(LengthSchedule{{4, 4}}.validate());
  CHECK_THROWS(LengthSchedule::doubling(0, 10));
}
