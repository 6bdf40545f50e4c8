#include "memagent/token_counter.hpp"

#include <algorithm>
#include <fstream>

namespace memagent {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t skip_spaces(std::string_view text, std::size_t i) {
  while (i < text.size() && is_space(text[i])) ++i;
  return i;
}

std::size_t word_end(std::string_view text, std::size_t i) {
  while (i < text.size() && !is_space(text[i])) ++i;
  return i;
}

}  // namespace

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::string to_string(CounterMode mode) {
  switch (mode) {
    case CounterMode::whitespace: return "whitespace";
    case CounterMode::chars_div_4: return "chars_div_4";
    case CounterMode::external_vocab: return "external_vocab";
  }
  return "whitespace";
}

CounterMode counter_mode_from_string(std::string_view name) {
  if (name == "whitespace") return CounterMode::whitespace;
  if (name == "chars_div_4") return CounterMode::chars_div_4;
  if (name == "external_vocab") return CounterMode::external_vocab;
  throw ConfigError("unknown token counter mode: " + std::string(name));
}

TokenCounter TokenCounter::whitespace() { return TokenCounter{}; }

TokenCounter TokenCounter::chars_div_4() {
  TokenCounter c;
  c.mode_ = CounterMode::chars_div_4;
  return c;
}

TokenCounter TokenCounter::external_vocab(const std::string& vocab_path) {
  std::ifstream in(vocab_path);
  if (!in) throw ConfigError("cannot read vocabulary file: " + vocab_path);
  auto vocab = std::make_shared<Vocab>();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    vocab->max_len = std::max(vocab->max_len, line.size());
    vocab->entries.insert(std::move(line));
  }
  TokenCounter c;
  c.mode_ = CounterMode::external_vocab;
  c.vocab_path_ = vocab_path;
  c.vocab_ = std::move(vocab);
  return c;
}

std::vector<std::size_t> TokenCounter::token_ends(std::string_view text) const {
  std::vector<std::size_t> ends;
  switch (mode_) {
    case CounterMode::whitespace: {
      std::size_t i = skip_spaces(text, 0);
      while (i < text.size()) {
        i = skip_spaces(text, word_end(text, i));
        ends.push_back(i);
      }
      break;
    }
    case CounterMode::chars_div_4: {
      std::size_t i = 0;
      int in_group = 0;
      while (i < text.size()) {
        i = std::min(text.size(), i + utf8_length(static_cast<unsigned char>(text[i])));
        if (++in_group == 4) {
          ends.push_back(i);
          in_group = 0;
        }
      }
      if (in_group > 0) ends.push_back(text.size());
      break;
    }
    case CounterMode::external_vocab: {
      std::size_t i = skip_spaces(text, 0);
      while (i < text.size()) {
        const std::size_t wend = word_end(text, i);
        while (i < wend) {
          std::size_t take = 0;
          const std::size_t longest = std::min(vocab_->max_len, wend - i);
          for (std::size_t len = longest; len > 0; --len) {
            if (vocab_->entries.count(std::string(text.substr(i, len)))) {
              take = len;
              break;
            }
          }
          if (take == 0) {
            take = std::min(wend - i, utf8_length(static_cast<unsigned char>(text[i])));
          }
          i += take;
          ends.push_back(i);
        }
        i = skip_spaces(text, i);
        ends.back() = i;
      }
      break;
    }
  }
  return ends;
}

std::size_t TokenCounter::count(std::string_view text) const {
  if (mode_ == CounterMode::whitespace) {
    std::size_t n = 0;
    std::size_t i = skip_spaces(text, 0);
    while (i < text.size()) {
      i = skip_spaces(text, word_end(text, i));
      ++n;
    }
    return n;
  }
  if (mode_ == CounterMode::chars_div_4) {
    std::size_t cps = 0;
    for (std::size_t i = 0; i < text.size();) {
      i += utf8_length(static_cast<unsigned char>(text[i]));
      ++cps;
    }
    return (cps + 3) / 4;
  }
  return token_ends(text).size();
}

std::string_view TokenCounter::truncate(std::string_view text, std::size_t max_tokens) const {
  if (max_tokens == 0) return text.substr(0, 0);
  const auto ends = token_ends(text);
  if (ends.size() <= max_tokens) return text;
  return text.substr(0, ends[max_tokens - 1]);
}

std::size_t count_tokens(const TokenCounter& counter, std::string_view text) {
  return counter.count(text);
}

}  // namespace memagent
