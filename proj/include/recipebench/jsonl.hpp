#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace recipebench {

using json = nlohmann::json;

struct JsonlLine {
  std::size_t line_no = 0;  // 1-based
  std::string text;
};

std::string read_text_file(const std::filesystem::path& path);

// Non-blank lines of a line-delimited file.
std::vector<JsonlLine> read_lines(const std::filesystem::path& path);

// Parses every non-blank line; a malformed line raises DataError naming the
// file and line.
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, creating parent dirs.
void write_text_file(const std::filesystem::path& path, const std::string& content);

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

// Compact serialization used for every JSONL row (UTF-8 kept verbatim).
std::string dump_line(const json& row);

}  // namespace recipebench
