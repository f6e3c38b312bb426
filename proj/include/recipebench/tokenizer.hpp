#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace recipebench::metrics {

inline constexpr const char* kFallbackTokenizer = "fallback";

// A token and its byte range in the source text.
struct TokenSpan {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::string tokenizer_id = kFallbackTokenizer;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

using TokenizerFn = std::function<std::vector<TokenSpan>(std::string_view)>;

// Segments on whitespace, emits each punctuation/symbol code point as its own
// token, and splits runs of letters at script transitions (hiragana,
// katakana, kanji, digits, other letters). The prolonged sound mark and
// iteration marks continue the preceding run.
std::vector<TokenSpan> fallback_segment(std::string_view text);

// A morphological analyzer (e.g. MeCab with IPAdic) plugs in here under its
// own id.
void register_tokenizer(const std::string& id, TokenizerFn fn);
bool has_tokenizer(const std::string& id);
std::vector<std::string> tokenizer_ids();

// Throws ConfigError for an unregistered id.
std::vector<TokenSpan> tokenize_spans(std::string_view text, const std::string& tokenizer_id = kFallbackTokenizer);
TokenSequence tokenize(std::string_view text, const std::string& tokenizer_id = kFallbackTokenizer);

}  // namespace recipebench::metrics
