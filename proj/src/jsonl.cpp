#include "recipebench/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "recipebench/error.hpp"
#include "recipebench/text.hpp"

namespace recipebench {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for reading: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buffer.str();
}

std::vector<JsonlLine> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for reading: " + path.string());
  std::vector<JsonlLine> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    lines.push_back({line_no, line});
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
  return lines;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> rows;
  for (const auto& line : read_lines(path)) {
    try {
      rows.push_back(json::parse(line.text));
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line.line_no) + ": invalid JSON: " + e.what());
    }
  }
  return rows;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string dump_line(const json& row) {
  return row.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string content;
  for (const auto& row : rows) {
    content += dump_line(row);
    content += '\n';
  }
  write_text_file(path, content);
}

}  // namespace recipebench
