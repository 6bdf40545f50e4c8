#include "memagent/mock_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "memagent/jsonl.hpp"
#include "memagent/rng.hpp"
#include "memagent/templates.hpp"

namespace memagent {
namespace {

constexpr std::string_view kNeedlePrefix = "One of the special magic numbers for ";
constexpr std::string_view kFactBullet = "- ";
constexpr std::string_view kPendingLine = "~ pending: ";
constexpr std::string_view kNothingYet = "No relevant information found.";
constexpr std::size_t kMaxCarry = 256;

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-';
}

bool mentions_key(std::string_view problem, std::string_view key) {
  for (auto pos = problem.find(key); pos != std::string_view::npos; pos = problem.find(key, pos + 1)) {
    const auto end = pos + key.size();
    const bool left = pos == 0 || !is_key_char(problem[pos - 1]);
    const bool right = end == problem.size() || !is_key_char(problem[end]);
    if (left && right) return true;
  }
  return false;
}

struct Needle {
  std::string sentence;
  std::string key;
  std::string value;
};

// Complete needle sentences in `text`, in order.
std::vector<Needle> find_needles(std::string_view text) {
  std::vector<Needle> out;
  for (auto pos = text.find(kNeedlePrefix); pos != std::string_view::npos;
       pos = text.find(kNeedlePrefix, pos + 1)) {
    const auto key_begin = pos + kNeedlePrefix.size();
    const auto is_pos = text.find(" is: ", key_begin);
    if (is_pos == std::string_view::npos) break;
    if (is_pos - key_begin > 64) continue;
    const auto v_begin = is_pos + 5;
    auto v_end = v_begin;
    while (v_end < text.size() && std::isdigit(static_cast<unsigned char>(text[v_end]))) ++v_end;
    if (v_end == v_begin || v_end >= text.size() || text[v_end] != '.') continue;
    out.push_back({std::string(text.substr(pos, v_end + 1 - pos)),
                   std::string(text.substr(key_begin, is_pos - key_begin)),
                   std::string(text.substr(v_begin, v_end - v_begin))});
  }
  return out;
}

struct VarStatement {
  std::string sentence;
  std::string name;
  std::string source;
};

std::vector<VarStatement> find_var_statements(std::string_view text) {
  std::vector<VarStatement> out;
  for (auto pos = text.find("VAR "); pos != std::string_view::npos; pos = text.find("VAR ", pos + 1)) {
    const auto name_begin = pos + 4;
    const auto eq = text.find(" = ", name_begin);
    if (eq == std::string_view::npos) break;
    const auto src_begin = eq + 3;
    const auto dot = text.find('.', src_begin);
    if (dot == std::string_view::npos) break;
    const auto name = text.substr(name_begin, eq - name_begin);
    const auto src = text.substr(src_begin, dot - src_begin);
    const auto simple = [](std::string_view s) {
      return !s.empty() && s.size() <= 16 &&
             std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
    };
    if (!simple(name) || !simple(src)) continue;
    out.push_back({std::string(text.substr(pos, dot + 1 - pos)), std::string(name), std::string(src)});
  }
  return out;
}

struct MemoryNotes {
  std::vector<std::string> facts;
  std::string pending;
};

MemoryNotes parse_notes(std::string_view memory) {
  MemoryNotes notes;
  std::istringstream in{std::string(memory)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(kFactBullet, 0) == 0) notes.facts.push_back(line.substr(kFactBullet.size()));
    else if (line.rfind(kPendingLine, 0) == 0) notes.pending = line.substr(kPendingLine.size());
  }
  return notes;
}

std::string render_notes(const MemoryNotes& notes) {
  std::string out;
  for (const auto& f : notes.facts) {
    if (!out.empty()) out += '\n';
    out.append(kFactBullet).append(f);
  }
  if (!notes.pending.empty()) {
    if (!out.empty()) out += '\n';
    out.append(kPendingLine).append(notes.pending);
  }
  return out.empty() ? std::string(kNothingYet) : out;
}

// Trailing unfinished sentence of a section, kept so that a needle split
// across a chunk boundary can be completed by the next section.
std::string unfinished_tail(std::string_view text) {
  std::string_view trimmed = text;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.remove_suffix(1);
  if (trimmed.empty()) return {};
  const char last = trimmed.back();
  if (last == '.' || last == '!' || last == '?') return {};
  auto cut = trimmed.rfind(". ");
  std::string_view tail = cut == std::string_view::npos ? text : text.substr(cut + 2);
  if (tail.size() > kMaxCarry) tail = tail.substr(tail.size() - kMaxCarry);
  std::string out;
  for (char c : tail) out.push_back(c == '\n' ? ' ' : c);
  return out;
}

std::string queried_value(std::string_view problem) {
  static constexpr std::string_view kMarker = "assigned the value ";
  const auto pos = problem.find(kMarker);
  if (pos == std::string_view::npos) return {};
  auto end = pos + kMarker.size();
  while (end < problem.size() && std::isdigit(static_cast<unsigned char>(problem[end]))) ++end;
  return std::string(problem.substr(pos + kMarker.size(), end - pos - kMarker.size()));
}

bool dropped(const MockScript& s, std::string_view fact) {
  if (s.behavior != MockBehavior::lossy || s.p_drop <= 0.0) return false;
  const auto h = splitmix64(fnv1a(fact, splitmix64(s.seed)));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < s.p_drop;
}

std::string extractor_update(const MockScript& script, const ParsedPrompt& p) {
  MemoryNotes notes = parse_notes(p.memory);
  const std::string text = notes.pending + *p.section;
  std::set<std::string> known(notes.facts.begin(), notes.facts.end());

  if (script.behavior == MockBehavior::k_hop_extractor) {
    std::set<std::string> reach;
    const auto root = queried_value(p.problem);
    if (!root.empty()) reach.insert(root);
    for (const auto& f : notes.facts)
      for (const auto& st : find_var_statements(f)) reach.insert(st.name);
    for (const auto& st : find_var_statements(text)) {
      if (!reach.count(st.source) || known.count(st.sentence)) continue;
      reach.insert(st.name);
      known.insert(st.sentence);
      notes.facts.push_back(st.sentence);
    }
  } else {
    for (const auto& n : find_needles(text)) {
      if (!mentions_key(p.problem, n.key) || known.count(n.sentence)) continue;
      if (dropped(script, n.sentence)) continue;
      known.insert(n.sentence);
      notes.facts.push_back(n.sentence);
    }
  }
  notes.pending = unfinished_tail(text);
  return render_notes(notes);
}

std::string extractor_answer(const MockScript& script, const ParsedPrompt& p) {
  const MemoryNotes notes = parse_notes(p.memory);
  std::vector<std::string> items;
  if (script.behavior == MockBehavior::k_hop_extractor) {
    std::set<std::string> reach;
    const auto root = queried_value(p.problem);
    if (!root.empty()) reach.insert(root);
    for (const auto& f : notes.facts) {
      for (const auto& st : find_var_statements(f)) {
        if (reach.count(st.source) && reach.insert(st.name).second) items.push_back(st.name);
      }
    }
  } else {
    for (const auto& f : notes.facts)
      for (const auto& n : find_needles(f))
        if (mentions_key(p.problem, n.key)) items.push_back(n.value);
  }
  if (items.empty()) return "\\boxed{unknown}";
  std::string joined;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) joined += ", ";
    joined += items[i];
  }
  return "The answer is \\boxed{" + joined + "}";
}

std::string respond_text(const MockScript& script, std::string_view prompt) {
  switch (script.behavior) {
    case MockBehavior::fixed_answer:
      return script.fixed_text;
    case MockBehavior::replay: {
      const auto it = script.replay.find(std::string(prompt));
      if (it == script.replay.end()) throw GatewayError("replay mock has no recorded completion for prompt");
      return it->second;
    }
    default:
      break;
  }
  const auto parsed = parse_prompt(prompt);
  if (!parsed) return "\\boxed{unknown}";
  if (script.behavior == MockBehavior::echo_memory) return parsed->memory;
  if (parsed->kind == PromptKind::memory_update) return extractor_update(script, *parsed);
  return extractor_answer(script, *parsed);
}

}  // namespace

std::string to_string(MockBehavior behavior) {
  switch (behavior) {
    case MockBehavior::echo_memory: return "echo_memory";
    case MockBehavior::perfect_extractor: return "perfect_extractor";
    case MockBehavior::k_hop_extractor: return "k_hop_extractor";
    case MockBehavior::lossy: return "lossy";
    case MockBehavior::fixed_answer: return "fixed_answer";
    case MockBehavior::replay: return "replay";
  }
  return "echo_memory";
}

MockScript MockScript::parse(std::string_view spec, std::uint64_t seed) {
  MockScript s;
  s.seed = seed;
  const auto colon = spec.find(':');
  const auto name = spec.substr(0, colon);
  const std::string arg = colon == std::string_view::npos ? "" : std::string(spec.substr(colon + 1));
  if (name == "echo_memory") {
    s.behavior = MockBehavior::echo_memory;
  } else if (name == "perfect_extractor") {
    s.behavior = MockBehavior::perfect_extractor;
  } else if (name == "k_hop_extractor") {
    s.behavior = MockBehavior::k_hop_extractor;
  } else if (name == "lossy") {
    s.behavior = MockBehavior::lossy;
    s.p_drop = arg.empty() ? 0.5 : std::stod(arg);
    if (s.p_drop < 0.0 || s.p_drop > 1.0) throw std::invalid_argument("lossy p_drop must be in [0, 1]");
  } else if (name == "fixed_answer") {
    s.behavior = MockBehavior::fixed_answer;
    s.fixed_text = arg;
  } else if (name == "replay") {
    s.behavior = MockBehavior::replay;
    for_each_jsonl(arg, [&](const nlohmann::json& j, std::size_t) {
      s.replay[j.at("prompt").get<std::string>()] = j.at("completion").get<std::string>();
    });
  } else {
    throw std::invalid_argument("unknown mock behavior: " + std::string(spec));
  }
  return s;
}

Completion mock_respond(const MockScript& script, std::string_view prompt) {
  Completion c;
  c.text = respond_text(script, prompt);
  if (script.emit_logprobs) {
    std::vector<long long> ids;
    std::vector<double> lps;
    std::istringstream words(c.text);
    std::string w;
    while (words >> w) {
      ids.push_back(static_cast<long long>(fnv1a(w) % 151936));
      lps.push_back(-static_cast<double>(fnv1a(w, script.seed + 1) % 4000) / 1000.0 - 0.001);
    }
    c.token_ids = std::move(ids);
    c.logprobs = std::move(lps);
  }
  return c;
}

Completion MockGateway::do_complete(const std::string& prompt, int /*max_output_tokens*/) {
  if (script_.latency_us > 0) std::this_thread::sleep_for(std::chrono::microseconds(script_.latency_us));
  return mock_respond(script_, prompt);
}

}  // namespace memagent
