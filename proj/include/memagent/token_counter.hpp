#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace memagent {

enum class CounterMode { whitespace, chars_div_4, external_vocab };

std::string to_string(CounterMode mode);
CounterMode counter_mode_from_string(std::string_view name);

// Raised when a counter cannot be configured (e.g. unreadable vocab file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pluggable token counter. Every mode partitions text into contiguous
// unit-cost tokens, so counts are additive across token boundaries and
// truncation / chunking can cut at exact token offsets.
//
//  whitespace      one token per whitespace-delimited word; the whitespace
//                  that follows a word belongs to that word.
//  chars_div_4     one token per 4 UTF-8 code points (last group may be short).
//  external_vocab  greedy longest-match against a vocabulary file (one entry
//                  per line) inside each word; unmatched code points are
//                  single tokens.
class TokenCounter {
 public:
  TokenCounter() = default;
  static TokenCounter whitespace();
  static TokenCounter chars_div_4();
  static TokenCounter external_vocab(const std::string& vocab_path);

  CounterMode mode() const { return mode_; }
  const std::string& vocab_path() const { return vocab_path_; }

  std::size_t count(std::string_view text) const;

  // End byte offset of every token, in order. The last entry equals
  // text.size() whenever the text holds at least one token. Leading
  // whitespace is folded into the first token.
  std::vector<std::size_t> token_ends(std::string_view text) const;

  // Longest prefix of `text` holding at most `max_tokens` tokens.
  std::string_view truncate(std::string_view text, std::size_t max_tokens) const;

 private:
  struct Vocab {
    std::unordered_set<std::string> entries;
    std::size_t max_len = 0;
  };

  CounterMode mode_ = CounterMode::whitespace;
  std::string vocab_path_;
  std::shared_ptr<const Vocab> vocab_;
};

std::size_t count_tokens(const TokenCounter& counter, std::string_view text);

// Byte length of the UTF-8 sequence starting with `lead` (1 for invalid bytes).
std::size_t utf8_length(unsigned char lead);

}  // namespace memagent
