#include <doctest.h>

#include <atomic>

#include "memagent/filter.hpp"
#include "memagent/mock_gateway.hpp"
#include "memagent/templates.hpp"

using namespace memagent;

namespace {

TaskInstance sample(const std::string& id, const std::string& answer) {
  TaskInstance t;
  t.instance_id = id;
  t.family = TaskFamily::qa_haystack;
  t.context = "irrelevant context";
  t.question = "Question " + id + "?";
  t.answers = AnswerSet{{answer}, AnswerMode::any_of};
  return t;
}

class DownGateway : public Gateway {
 public:
  DownGateway() : Gateway(4) {}
  std::string label() const override { return "down"; }
  std::atomic<int> calls{0};

 protected:
  Completion do_complete(const std::string&, int) override {
    ++calls;
    throw GatewayError("connection refused");
  }
};

// Records the prompts it is sent.
class RecordingGateway : public Gateway {
 public:
  RecordingGateway() : Gateway(1) {}
  std::string label() const override { return "rec"; }
  std::vector<std::string> prompts;

 protected:
  Completion do_complete(const std::string& prompt, int) override {
    prompts.push_back(prompt);
    return {"\\boxed{unknown}", {}, {}, 0.0};
  }
};

}  // namespace

TEST_CASE("a fixed correct answer drops the sample") {
  MockGateway gw(MockScript::parse("fixed_answer:The answer is \\boxed{Paris}"));
  const auto out = filter_known_questions({sample("a", "Paris")}, gw);
  CHECK(out.dropped.size() == 1);
  CHECK(out.kept.empty());
  CHECK(out.drop_rate == 1.0);
}

TEST_CASE("an unknown answer keeps the sample") {
  MockGateway gw(MockScript::parse("fixed_answer:\\boxed{unknown}"));
  const auto out = filter_known_questions({sample("a", "Paris")}, gw);
  CHECK(out.kept.size() == 1);
  CHECK(out.dropped.empty());
  CHECK(out.drop_rate == 0.0);
}

TEST_CASE("drop rate follows the fraction of known questions") {
  std::vector<TaskInstance> pool;
  for (int i = 0; i < 200; ++i) pool.push_back(sample("s" + std::to_string(i), i % 2 ? "Paris" : "Rome"));
  MockGateway gw(MockScript::parse("fixed_answer:\\boxed{Paris}"), 8);
  const auto out = filter_known_questions(pool, gw);
  CHECK(out.drop_rate == doctest::Approx(0.5));
  CHECK(out.kept.size() == 100);
  // Output order follows the input.
  for (std::size_t i = 1; i < out.kept.size(); ++i)
    CHECK(std::stoi(out.kept[i - 1].instance_id.substr(1)) < std::stoi(out.kept[i].instance_id.substr(1)));
}

TEST_CASE("gateway failures keep the sample tagged unfiltered") {
  DownGateway gw;
  const auto out = filter_known_questions({sample("a", "x"), sample("b", "y")}, gw);
  CHECK(out.kept.size() == 2);
  CHECK(out.unfiltered == 2);
  for (const auto& t : out.kept)
    CHECK(std::find(t.tags.begin(), t.tags.end(), std::string(kUnfilteredTag)) != t.tags.end());
}

TEST_CASE("the filter prompt withholds the context") {
  RecordingGateway gw;
  const auto out = filter_known_questions({sample("a", "x")}, gw, default_verifier, 2);
  REQUIRE(gw.prompts.size() == 2);
  CHECK(gw.prompts[0] == render_answer_prompt("Question a?", kEmptyMemory));
  CHECK(gw.prompts[0].find("irrelevant context") == std::string::npos);
}

TEST_CASE("a custom verifier is honoured") {
  MockGateway gw(MockScript::parse("fixed_answer:anything"));
  const auto out = filter_known_questions({sample("a", "x")}, gw,
                                          [](std::string_view, const AnswerSet&) { return 1.0; });
  CHECK(out.dropped.size() == 1);
}
