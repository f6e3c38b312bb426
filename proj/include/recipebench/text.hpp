#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace recipebench::text {

// Decodes one code point starting at `pos` and advances `pos`. Malformed
// sequences decode to U+FFFD and consume a single byte.
char32_t next_code_point(std::string_view s, std::size_t& pos);

std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(char32_t cp);
void append_utf8(std::string& out, char32_t cp);

std::size_t code_point_count(std::string_view s);

bool is_space(char32_t cp);

// Trims Unicode whitespace (including U+3000) from both ends.
std::string_view trim(std::string_view s);
std::string trim_copy(std::string_view s);

// Removes every whitespace code point.
std::string strip_all_space(std::string_view s);

std::string nfkc(std::string_view s);
std::string case_fold(std::string_view s);

// Maps katakana U+30A1..U+30F6 onto the hiragana block; everything else is
// left untouched (including the prolonged sound mark).
std::string katakana_to_hiragana(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace recipebench::text
