#include <doctest.h>

#include <random>

#include "memagent/generators.hpp"
#include "memagent/mock_gateway.hpp"
#include "memagent/verifiers.hpp"
#include "memagent/workflow.hpp"

using namespace memagent;

namespace {

std::string words(std::size_t n, const std::string& w = "lorem") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += w + (i % 13 == 12 ? ".\n" : " ");
  return s;
}

// Fails every call after the first `ok_calls`.
class FlakyGateway : public Gateway {
 public:
  explicit FlakyGateway(std::size_t ok_calls) : Gateway(1), ok_(ok_calls) {}
  std::string label() const override { return "flaky"; }

 protected:
  Completion do_complete(const std::string& prompt, int) override {
    if (seen_++ >= ok_) throw GatewayError("upstream unavailable");
    return mock_respond(MockScript::parse("echo_memory"), prompt);
  }

 private:
  std::size_t ok_;
  std::size_t seen_ = 0;
};

TaskInstance needle_instance(std::size_t before, std::size_t after, const std::string& key,
                             const std::string& value) {
  TaskInstance t;
  t.instance_id = "manual";
  t.family = TaskFamily::niah_single_1;
  t.context = words(before) + "One of the special magic numbers for " + key + " is: " + value + ". " + words(after);
  t.question = "What is the special magic number for " + key + " mentioned in the provided text?";
  t.answers = AnswerSet{{value}, AnswerMode::any_of};
  return t;
}

}  // namespace

TEST_CASE("chunk plan for a 12000-token document") {
  const auto c = TokenCounter::whitespace();
  const auto text = words(12000);
  const auto plan = chunk_document(text, 5000, c);
  REQUIRE(plan.size() == 3);
  CHECK(plan.chunk_token_counts == std::vector<std::size_t>{5000, 5000, 2000});
  CHECK(plan.total_tokens == 12000);
  std::string joined;
  for (const auto& s : plan.chunk_texts) joined += s;
  CHECK(joined == text);
  for (std::size_t k = 0; k < plan.size(); ++k) CHECK(c.count(plan.chunk_texts[k]) == plan.chunk_token_counts[k]);
}

TEST_CASE("a document of exactly one budget is one identical chunk") {
  const auto c = TokenCounter::whitespace();
  const auto text = words(5000);
  const auto plan = chunk_document(text, 5000, c);
  REQUIRE(plan.size() == 1);
  CHECK(plan.chunk_texts[0] == text);
}

TEST_CASE("28K synthesized sample chunks into six pieces") {
  const auto c = TokenCounter::whitespace();
  const auto t = gen_niah(NiahSpec::preset(TaskFamily::niah_single_2, 28000), 5, c);
  const auto plan = chunk_document(t.context, 5000, c);
  const auto total = c.count(t.context);
  CHECK(plan.size() == (total + 4999) / 5000);
  CHECK(plan.size() == 6);
  std::string joined;
  for (const auto& s : plan.chunk_texts) joined += s;
  CHECK(joined == t.context);
}

TEST_CASE("chunk round trip over random unicode documents") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pieces = {"α", "b", " ", "\n", "日本語", "🙂", "word", "x", "\t", "  "};
  for (const auto& c : {TokenCounter::whitespace(), TokenCounter::chars_div_4()}) {
    for (int trial = 0; trial < 300; ++trial) {
      std::string text = "start";
      const auto n = 1 + rng() % 200;
      for (std::size_t i = 0; i < n; ++i) text += pieces[rng() % pieces.size()];
      const std::size_t budget = 1 + rng() % 17;
      const auto plan = chunk_document(text, budget, c);
      std::string joined;
      for (std::size_t k = 0; k < plan.size(); ++k) {
        joined += plan.chunk_texts[k];
        CHECK(plan.chunk_token_counts[k] >= 1);
        CHECK(plan.chunk_token_counts[k] <= budget);
        CHECK(c.count(plan.chunk_texts[k]) == plan.chunk_token_counts[k]);
      }
      CHECK(joined == text);
      const auto total = c.count(text);
      CHECK(plan.size() == (total + budget - 1) / budget);
    }
  }
}

TEST_CASE("whitespace chunks end at whitespace boundaries") {
  const auto c = TokenCounter::whitespace();
  const auto plan = chunk_document(words(1234), 100, c);
  for (std::size_t k = 0; k + 1 < plan.size(); ++k) {
    const char last = plan.chunk_texts[k].back();
    CHECK((last == ' ' || last == '\n'));
  }
}

TEST_CASE("chunking rejects bad input") {
  const auto c = TokenCounter::whitespace();
  CHECK_THROWS_AS(chunk_document("text", 0, c), std::invalid_argument);
  CHECK_THROWS_AS(chunk_document("", 10, c), std::invalid_argument);
}

TEST_CASE("three chunks give three memory updates and one answer") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("perfect_extractor"));
  Budgets b;
  b.chunk = 100;
  const auto t = needle_instance(120, 150, "quiet-river", "1234567");
  const auto trace = run_episode(t, gw, b, c);
  REQUIRE(trace.complete());
  const auto k = chunk_document(t.context, b.chunk, c).size();
  CHECK(k == 3);
  REQUIRE(trace.conversations.size() == k + 1);
  for (std::size_t j = 0; j < k; ++j) {
    CHECK(trace.conversations[j].kind == ConversationKind::memory_update);
    CHECK(trace.conversations[j].memory_after.has_value());
  }
  CHECK(trace.conversations.back().kind == ConversationKind::answer);
  CHECK(!trace.conversations.back().memory_after);
  CHECK(gw.call_count() == k + 1);
  CHECK(check_trace(trace, b, c).empty());
}

TEST_CASE("perfect extractor finds a needle in chunk two") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("perfect_extractor"));
  Budgets b;
  b.chunk = 5000;
  const auto t = needle_instance(7000, 4000, "amber-falcon", "7654321");
  REQUIRE(chunk_document(t.context, b.chunk, c).size() == 3);
  const auto trace = run_episode(t, gw, b, c);
  REQUIRE(trace.complete());
  // Chunk 1 has no needle; memory after chunk 2 has it.
  CHECK(trace.conversations[0].memory_after->text.find("7654321") == std::string::npos);
  CHECK(trace.conversations[1].memory_after->text.find("7654321") != std::string::npos);
  CHECK(extract_boxed(trace.final_answer).answer == "7654321");
  CHECK(score_completion(trace.final_answer, t.answers).score == 1.0);
}

TEST_CASE("a needle cut by a chunk boundary is still found") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("perfect_extractor"));
  Budgets b;
  for (std::size_t cut = 95; cut <= 100; ++cut) {
    b.chunk = 100;
    // The needle starts a few tokens before the first boundary.
    const auto t = needle_instance(cut, 50, "amber-falcon", "7654321");
    const auto trace = run_episode(t, gw, b, c);
    CHECK(score_completion(trace.final_answer, t.answers).score == 1.0);
  }
}

TEST_CASE("echo mock leaves memory at its value after chunk one") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("echo_memory"));
  Budgets b;
  b.chunk = 50;
  const auto t = needle_instance(200, 200, "k-k", "1111111");
  const auto trace = run_episode(t, gw, b, c);
  REQUIRE(trace.complete());
  const auto first = trace.conversations[0].memory_after->text;
  for (const auto& conv : trace.conversations)
    if (conv.memory_after) CHECK(conv.memory_after->text == first);
}

TEST_CASE("oversized memory completions are truncated and flagged") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("fixed_answer:" + words(50, "blah")));
  Budgets b;
  b.chunk = 100;
  b.memory = 10;
  const auto t = needle_instance(150, 10, "a-b", "1234567");
  const auto trace = run_episode(t, gw, b, c);
  REQUIRE(trace.complete());
  for (const auto& conv : trace.conversations) {
    if (!conv.memory_after) continue;
    CHECK(conv.memory_after->truncated);
    CHECK(conv.memory_after->token_count == 10);
  }
  CHECK(check_trace(trace, b, c).empty());
}

TEST_CASE("query over the query budget is rejected before any call") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("echo_memory"));
  Budgets b;
  b.query = 5;
  auto t = needle_instance(10, 10, "a-b", "1234567");
  CHECK_THROWS_AS(run_episode(t, gw, b, c), std::invalid_argument);
  CHECK(gw.call_count() == 0);
}

TEST_CASE("gateway failure aborts with a partial trace") {
  const auto c = TokenCounter::whitespace();
  FlakyGateway gw(2);
  Budgets b;
  b.chunk = 50;
  const auto t = needle_instance(200, 200, "a-b", "1234567");
  const auto trace = run_episode(t, gw, b, c);
  REQUIRE(trace.error.has_value());
  CHECK(trace.error->find("upstream unavailable") != std::string::npos);
  CHECK(trace.conversations.size() == 2);
  CHECK(!trace.complete());
}

TEST_CASE("replaying step j reproduces memory j") {
  const auto c = TokenCounter::whitespace();
  const auto script = MockScript::parse("lossy:0.3", 9);
  MockGateway gw(script);
  Budgets b;
  b.chunk = 40;
  const auto t = gen_niah(NiahSpec::preset(TaskFamily::niah_multikey_1, 1024), 3, c);
  const auto trace = run_episode(t, gw, b, c);
  REQUIRE(trace.complete());
  for (const auto& conv : trace.conversations) {
    const auto again = mock_respond(script, conv.prompt).text;
    CHECK(again == conv.completion);
    if (conv.memory_after) CHECK(MemoryState::overwrite(c, again, b.memory).text == conv.memory_after->text);
  }
}

TEST_CASE("window and memory bounds hold across generated instances") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("perfect_extractor"));
  Budgets b;
  b.chunk = 300;
  b.memory = 64;
  for (auto fam : {TaskFamily::niah_single_1, TaskFamily::niah_multikey_2, TaskFamily::niah_multivalue}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto t = gen_niah(NiahSpec::preset(fam, 2048), seed, c);
      const auto before = gw.call_count();
      const auto trace = run_episode(t, gw, b, c);
      REQUIRE(trace.complete());
      CHECK(check_trace(trace, b, c).empty());
      CHECK(gw.call_count() - before == chunk_document(t.context, b.chunk, c).size() + 1);
    }
  }
}

TEST_CASE("check_trace reports broken hand-offs") {
  const auto c = TokenCounter::whitespace();
  MockGateway gw(MockScript::parse("perfect_extractor"));
  Budgets b;
  b.chunk = 50;
  auto trace = run_episode(needle_instance(100, 100, "a-b", "1234567"), gw, b, c);
  REQUIRE(check_trace(trace, b, c).empty());
  trace.conversations[1].memory_after->text = "tampered";
  CHECK(!check_trace(trace, b, c).empty());
}

TEST_CASE("conversation kind names") {
  CHECK(conversation_kind_from_string(to_string(ConversationKind::answer)) == ConversationKind::answer);
  CHECK(conversation_kind_from_string("memory_update") == ConversationKind::memory_update);
  CHECK_THROWS(conversation_kind_from_string("other"));
}
