#include "recipebench/tokenizer.hpp"

#include <map>
#include <mutex>

#include "recipebench/error.hpp"
#include "recipebench/text.hpp"

namespace recipebench::metrics {

namespace {

enum class CharClass { Space, Symbol, Hiragana, Katakana, Kanji, Digit, Letter, Continuation };

CharClass classify(char32_t cp) {
  if (text::is_space(cp)) return CharClass::Space;
  if (cp == 0x30FC || cp == 0xFF70 || cp == 0x309D || cp == 0x309E || cp == 0x30FD || cp == 0x30FE) {
    return CharClass::Continuation;  // ー ｰ ゝ ゞ ヽ ヾ
  }
  if (cp == 0x3005 || cp == 0x3006 || cp == 0x3007) return CharClass::Kanji;  // 々 〆 〇
  if (cp >= 0x3041 && cp <= 0x309F) return CharClass::Hiragana;
  if ((cp >= 0x30A0 && cp <= 0x30FF) || (cp >= 0x31F0 && cp <= 0x31FF) || (cp >= 0xFF66 && cp <= 0xFF9F)) {
    return CharClass::Katakana;
  }
  if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
      (cp >= 0x20000 && cp <= 0x2FFFF)) {
    return CharClass::Kanji;
  }
  if ((cp >= '0' && cp <= '9') || (cp >= 0xFF10 && cp <= 0xFF19)) return CharClass::Digit;
  if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z') || (cp >= 0xFF21 && cp <= 0xFF3A) ||
      (cp >= 0xFF41 && cp <= 0xFF5A) || (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7) ||
      (cp >= 0x370 && cp <= 0x52F)) {
    return CharClass::Letter;
  }
  return CharClass::Symbol;
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, TokenizerFn> tokenizers{{kFallbackTokenizer, fallback_segment}};
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

std::vector<TokenSpan> fallback_segment(std::string_view s) {
  std::vector<TokenSpan> tokens;
  std::size_t pos = 0;
  std::size_t run_begin = 0;
  CharClass run_class = CharClass::Space;
  bool in_run = false;

  auto close_run = [&](std::size_t end) {
    if (in_run) tokens.push_back({std::string(s.substr(run_begin, end - run_begin)), run_begin, end});
    in_run = false;
  };

  while (pos < s.size()) {
    const std::size_t start = pos;
    const char32_t cp = text::next_code_point(s, pos);
    CharClass cls = classify(cp);
    if (cls == CharClass::Continuation) {
      if (in_run) continue;
      cls = CharClass::Katakana;
    }
    if (cls == CharClass::Space) {
      close_run(start);
      continue;
    }
    if (cls == CharClass::Symbol) {
      close_run(start);
      tokens.push_back({std::string(s.substr(start, pos - start)), start, pos});
      continue;
    }
    if (in_run && cls == run_class) continue;
    close_run(start);
    in_run = true;
    run_begin = start;
    run_class = cls;
  }
  close_run(s.size());
  return tokens;
}

void register_tokenizer(const std::string& id, TokenizerFn fn) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.tokenizers[id] = std::move(fn);
}

bool has_tokenizer(const std::string& id) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  return r.tokenizers.count(id) > 0;
}

std::vector<std::string> tokenizer_ids() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> ids;
  for (const auto& [id, _] : r.tokenizers) ids.push_back(id);
  return ids;
}

std::vector<TokenSpan> tokenize_spans(std::string_view text, const std::string& tokenizer_id) {
  TokenizerFn fn;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.tokenizers.find(tokenizer_id);
    if (it == r.tokenizers.end()) throw ConfigError("unregistered tokenizer: " + tokenizer_id);
    fn = it->second;
  }
  return fn(text);
}

TokenSequence tokenize(std::string_view text, const std::string& tokenizer_id) {
  TokenSequence seq;
  seq.tokenizer_id = tokenizer_id;
  for (auto& span : tokenize_spans(text, tokenizer_id)) seq.tokens.push_back(std::move(span.text));
  return seq;
}

}  // namespace recipebench::metrics
