#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "recipebench/dataset.hpp"
#include "recipebench/templates.hpp"
#include "recipebench/tokenizer.hpp"

namespace recipebench::parser {

enum class Classification { Completed, Refusal };

enum class Element { Title, Ingredients, Procedures };

const char* to_string(Classification c);
const char* to_string(Element e);  // "title" | "ingredients" | "procedures"
Element element_from_string(const std::string& name);

struct RepetitionDiagnostic {
  bool loop_detected = false;
  std::size_t period_tokens = 0;
  std::size_t repeats = 0;           // consecutive copies of the period block
  std::size_t loop_start = 0;        // byte offset of the first copy
  std::size_t salvage_boundary = 0;  // byte offset of the second copy; text before it is kept

  friend bool operator==(const RepetitionDiagnostic&, const RepetitionDiagnostic&) = default;
};

struct ParsedOutput {
  Classification classification = Classification::Completed;
  std::optional<std::string> title;
  std::optional<std::vector<dataset::IngredientEntry>> ingredients;
  std::optional<std::vector<std::string>> steps;
  std::set<Element> element_errors;
  std::optional<RepetitionDiagnostic> repetition;
  std::string raw;

  bool completed() const { return classification == Classification::Completed; }
  bool has_error(Element e) const { return element_errors.count(e) > 0; }
  bool clean() const { return completed() && element_errors.empty(); }

  friend bool operator==(const ParsedOutput&, const ParsedOutput&) = default;
};

struct ParseOptions {
  std::size_t window_tokens = 64;
  std::size_t min_repeats = 3;
  std::string tokenizer_id = metrics::kFallbackTokenizer;
  bool salvage = true;
  // Treat every digit run as the same token during loop detection, so
  // "3. X 4. X 5. X" counts as a loop.
  bool mask_digits = true;
};

// Earliest start position from which a block of at most `window_tokens`
// tokens repeats at least `min_repeats` times back to back. Among blocks
// starting at that position the shortest period wins. Blocks made only of
// punctuation or symbols do not count. Throws DataError when min_repeats < 2
// or window_tokens == 0.
RepetitionDiagnostic detect_repetition(std::string_view text, std::size_t min_repeats = 3,
                                       std::size_t window_tokens = 64,
                                       const std::string& tokenizer_id = metrics::kFallbackTokenizer);

// Same search over pre-tokenized input. Offsets are taken from the spans.
RepetitionDiagnostic detect_repetition_in_spans(const std::vector<metrics::TokenSpan>& spans,
                                                std::size_t min_repeats, std::size_t window_tokens,
                                                bool mask_digits = false);

// Never throws on content: every input maps to Completed (with zero or more
// element errors) or Refusal.
ParsedOutput parse_generated(std::string_view text, const TemplateConfig& templates = {},
                             const ParseOptions& options = {});

// Canonical text of one element for scoring, or "" when the element is
// flagged or the output is a refusal. Ingredients are "name: quantity"
// lines; procedures are steps joined by newlines.
std::string element_or_empty(const ParsedOutput& parsed, Element element);

struct GeneratedSample {
  std::string sample_id;
  std::string generated_text;
};

std::vector<GeneratedSample> load_generated(const std::filesystem::path& path);

json parsed_to_json(const ParsedOutput& parsed, const std::string& sample_id);
ParsedOutput parsed_from_json(const json& row);

}  // namespace recipebench::parser
