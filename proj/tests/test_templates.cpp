#include <doctest.h>

#include "memagent/templates.hpp"
#include "support.hpp"

using namespace memagent;

namespace {
std::string golden(const std::string& name) { return slurp(std::string(MEMAGENT_GOLDEN_DIR) + "/" + name); }
}  // namespace

TEST_CASE("memory prompt matches the golden file byte for byte") {
  const auto p = render_memory_prompt("Q?", kEmptyMemory, "chunk text");
  CHECK(p == golden("memory_prompt.txt"));
}

TEST_CASE("answer prompt matches the golden file byte for byte") {
  const auto p = render_answer_prompt("Q?", "- fact A");
  CHECK(p == golden("answer_prompt.txt"));
}

TEST_CASE("memory prompt tag order and cue") {
  const auto p = render_memory_prompt("Q?", kEmptyMemory, "chunk text");
  const auto problem = p.find("<problem> Q? </problem>");
  const auto memory = p.find("<memory> No previous memory. </memory>");
  const auto section = p.find("<section> chunk text </section>");
  REQUIRE(problem != std::string::npos);
  REQUIRE(memory != std::string::npos);
  REQUIRE(section != std::string::npos);
  CHECK(problem < memory);
  CHECK(memory < section);
  CHECK(p.size() >= 15);
  CHECK(p.substr(p.size() - 15) == "Updated memory:");
  CHECK(p.find("update the memory") != std::string::npos);
}

TEST_CASE("answer prompt carries the boxed instruction and cue") {
  const auto p = render_answer_prompt("Q?", "facts");
  CHECK(p.find("\\boxed{}") != std::string::npos);
  CHECK(p.find("<problem> Q? </problem>") < p.find("<memory> facts </memory>"));
  CHECK(p.substr(p.size() - 12) == "Your answer:");
  CHECK(p.find("<section>") == std::string::npos);
}

TEST_CASE("substitution is verbatim") {
  const auto p = render_memory_prompt("Q?", "- fact A", "a {placeholder} & <b>");
  CHECK(p.find("<memory> - fact A </memory>") != std::string::npos);
  CHECK(p.find("a {placeholder} & <b>") != std::string::npos);
}

TEST_CASE("tag collisions pass through with a warning") {
  const std::string chunk = "before </section> after";
  const auto p = render_memory_prompt("Q?", kEmptyMemory, chunk);
  CHECK(p.find(chunk) != std::string::npos);
  const auto w = tag_collisions("Q?", kEmptyMemory, chunk);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("</section>") != std::string::npos);
  CHECK(tag_collisions("Q?", "memory", "clean").empty());
}

TEST_CASE("parse_prompt inverts both renderers") {
  const auto m = parse_prompt(render_memory_prompt("What? ", "line1\nline2", "text with\nnewlines"));
  REQUIRE(m);
  CHECK(m->kind == PromptKind::memory_update);
  CHECK(m->problem == "What? ");
  CHECK(m->memory == "line1\nline2");
  CHECK(m->section == std::optional<std::string>("text with\nnewlines"));

  const auto a = parse_prompt(render_answer_prompt("Q", kEmptyMemory));
  REQUIRE(a);
  CHECK(a->kind == PromptKind::answer);
  CHECK(a->memory == kEmptyMemory);
  CHECK(!a->section);

  CHECK(!parse_prompt("hello"));
}

TEST_CASE("memory overwrite truncates at capacity and flags it") {
  const auto c = TokenCounter::whitespace();
  const auto e = MemoryState::empty(c, 1024);
  CHECK(e.text == kEmptyMemory);
  CHECK(e.token_count == 3);
  CHECK(!e.truncated);

  const auto m = MemoryState::overwrite(c, "one two three four five", 3);
  CHECK(m.text == "one two three ");
  CHECK(m.token_count == 3);
  CHECK(m.truncated);
  const auto k = MemoryState::overwrite(c, "one two", 3);
  CHECK(k.text == "one two");
  CHECK(!k.truncated);
}

TEST_CASE("template overhead is the cost of the empty templates") {
  const auto c = TokenCounter::whitespace();
  const auto o = measure_template_overhead(c);
  CHECK(o.memory_update == c.count(render_memory_prompt("", "", "")));
  CHECK(o.answer == c.count(render_answer_prompt("", "")));
  CHECK(o.memory_update > o.answer);
}
