#include "recipebench/parser.hpp"

#include <algorithm>
#include <array>

#include "recipebench/error.hpp"
#include "recipebench/text.hpp"

namespace recipebench::parser {

using dataset::IngredientEntry;

const char* to_string(Classification c) { return c == Classification::Refusal ? "refusal" : "completed"; }

const char* to_string(Element e) {
  switch (e) {
    case Element::Title: return "title";
    case Element::Ingredients: return "ingredients";
    case Element::Procedures: return "procedures";
  }
  return "title";
}

Element element_from_string(const std::string& name) {
  for (auto e : {Element::Title, Element::Ingredients, Element::Procedures}) {
    if (name == to_string(e)) return e;
  }
  throw DataError("unknown recipe element: " + name);
}

// ---- repetition ------------------------------------------------------------

namespace {

struct LoopHit {
  std::size_t start = 0;
  std::size_t period = 0;
  std::size_t repeats = 0;
};

// A repeating block must contain at least one word token, so runs of
// punctuation such as "!!!" or "……" are not loops.
std::optional<LoopHit> find_loop(const std::vector<std::string_view>& tokens, const std::vector<bool>& is_word,
                                 std::size_t min_repeats, std::size_t window) {
  const std::size_t n = tokens.size();
  std::vector<std::size_t> words_before(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) words_before[j + 1] = words_before[j] + (is_word[j] ? 1 : 0);
  std::optional<LoopHit> best;
  std::vector<std::size_t> run(n + 1, 0);
  for (std::size_t p = 1; p <= window && p * min_repeats <= n; ++p) {
    // run[j]: how many consecutive positions from j satisfy t[k] == t[k + p].
    run[n] = 0;
    for (std::size_t j = n; j-- > 0;) run[j] = (j + p < n && tokens[j] == tokens[j + p]) ? run[j + 1] + 1 : 0;
    const std::size_t need = (min_repeats - 1) * p;
    const std::size_t limit = best ? best->start : n;
    for (std::size_t i = 0; i < limit; ++i) {
      if (run[i] >= need && words_before[i + p] > words_before[i]) {
        best = LoopHit{i, p, 1 + run[i] / p};
        break;
      }
    }
  }
  return best;
}

bool is_symbol_code_point(char32_t cp) {
  if (cp < 0x80) return !((cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'));
  return (cp >= 0x00A0 && cp <= 0x00BF) || (cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x3000 && cp <= 0x303F) ||
         cp == 0x30FB || (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF00 && cp <= 0xFF0F) ||
         (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

bool is_word_token(std::string_view token) {
  std::size_t pos = 0;
  while (pos < token.size()) {
    if (!is_symbol_code_point(text::next_code_point(token, pos))) return true;
  }
  return false;
}

bool is_digit_token(std::string_view token) {
  std::size_t pos = 0;
  const char32_t cp = text::next_code_point(token, pos);
  return (cp >= '0' && cp <= '9') || (cp >= 0xFF10 && cp <= 0xFF19);
}

void validate_repetition_params(std::size_t min_repeats, std::size_t window_tokens) {
  if (min_repeats < 2) throw DataError("min_repeats must be >= 2");
  if (window_tokens == 0) throw DataError("window_tokens must be >= 1");
}

}  // namespace

RepetitionDiagnostic detect_repetition_in_spans(const std::vector<metrics::TokenSpan>& spans,
                                                std::size_t min_repeats, std::size_t window_tokens,
                                                bool mask_digits) {
  validate_repetition_params(min_repeats, window_tokens);
  static constexpr std::string_view kNumber = "\x02num";
  std::vector<std::string_view> tokens;
  std::vector<bool> is_word;
  tokens.reserve(spans.size());
  is_word.reserve(spans.size());
  for (const auto& s : spans) {
    tokens.push_back(mask_digits && is_digit_token(s.text) ? kNumber : s.text);
    is_word.push_back(is_word_token(s.text));
  }

  RepetitionDiagnostic diag;
  if (auto hit = find_loop(tokens, is_word, min_repeats, window_tokens)) {
    diag.loop_detected = true;
    diag.period_tokens = hit->period;
    diag.repeats = hit->repeats;
    diag.loop_start = spans[hit->start].begin;
    diag.salvage_boundary = spans[hit->start + hit->period].begin;
  } else {
    diag.salvage_boundary = spans.empty() ? 0 : spans.back().end;
  }
  return diag;
}

RepetitionDiagnostic detect_repetition(std::string_view text, std::size_t min_repeats, std::size_t window_tokens,
                                       const std::string& tokenizer_id) {
  validate_repetition_params(min_repeats, window_tokens);
  auto diag = detect_repetition_in_spans(metrics::tokenize_spans(text, tokenizer_id), min_repeats, window_tokens);
  if (!diag.loop_detected) diag.salvage_boundary = text.size();
  return diag;
}

// ---- line matching ---------------------------------------------------------

namespace {

bool is_one_of(char32_t cp, std::initializer_list<char32_t> set) {
  return std::find(set.begin(), set.end(), cp) != set.end();
}

// Strips code points from the front while `pred` holds.
template <class Pred>
std::string_view strip_front(std::string_view s, Pred pred) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = pos;
    if (!pred(text::next_code_point(s, next))) break;
    pos = next;
  }
  return s.substr(pos);
}

std::string_view strip_decorations(std::string_view s) {
  return strip_front(text::trim(s), [](char32_t cp) {
    return text::is_space(cp) || is_one_of(cp, {'#', '*', '[', 0x3010 /*【*/, 0xFF3B /*［*/, 0x25A0 /*■*/, 0x25C6 /*◆*/});
  });
}

// Drops a parenthesised note such as "(2人分)" that directly follows a label.
std::string_view strip_parenthetical(std::string_view s) {
  s = text::trim(s);
  std::size_t pos = 0;
  if (s.empty()) return s;
  const char32_t open = text::next_code_point(s, pos);
  if (open != '(' && open != 0xFF08) return s;
  const char32_t close = open == '(' ? U')' : U'）';
  while (pos < s.size()) {
    if (text::next_code_point(s, pos) == close) return text::trim(s.substr(pos));
  }
  return s;
}

struct LabelMatch {
  std::string_view rest;  // text after the label and its separator, trimmed
  bool had_separator = false;
};

class LineMatcher {
 public:
  explicit LineMatcher(const TemplateConfig& t)
      : title_(text::nfkc(t.title_label)),
        ingredients_(text::nfkc(t.ingredients_label)),
        procedures_(text::nfkc(t.procedures_label)),
        separator_(text::nfkc(text::trim(t.separator))) {}

  std::optional<LabelMatch> match_label(std::string_view line, const std::string& label) const {
    const std::string_view s = strip_decorations(line);
    if (s.empty()) return std::nullopt;
    // Cheap reject before the code-point walk.
    if (!text::starts_with(text::nfkc(s.substr(0, std::min(s.size(), label.size() * 3 + 8))), label)) {
      return std::nullopt;
    }
    std::size_t end = 0;
    bool found = false;
    while (end < s.size()) {
      text::next_code_point(s, end);
      const std::string prefix = text::nfkc(s.substr(0, end));
      if (prefix == label) {
        found = true;
        break;
      }
      if (prefix.size() > label.size() + 8) break;
    }
    if (!found) return std::nullopt;
    std::string_view rest = strip_front(s.substr(end), [](char32_t cp) {
      return text::is_space(cp) || is_one_of(cp, {'*', ']', 0x3011 /*】*/, 0xFF3D /*］*/});
    });
    rest = strip_parenthetical(rest);
    LabelMatch m;
    if (auto after = strip_separator(rest)) {
      m.had_separator = true;
      rest = *after;
    }
    m.rest = text::trim(rest);
    return m;
  }

  // Returns the remainder when `s` starts with the separator (any NFKC
  // variant of it, e.g. full-width colon).
  std::optional<std::string_view> strip_separator(std::string_view s) const {
    if (separator_.empty() || s.empty()) return std::nullopt;
    std::size_t pos = 0;
    text::next_code_point(s, pos);
    if (text::nfkc(s.substr(0, pos)) == separator_) return s.substr(pos);
    if (text::starts_with(s, separator_)) return s.substr(separator_.size());
    return std::nullopt;
  }

  // Byte position of the first separator occurrence and its length.
  std::optional<std::pair<std::size_t, std::size_t>> find_separator(std::string_view s) const {
    std::size_t pos = 0;
    while (pos < s.size()) {
      const std::size_t start = pos;
      text::next_code_point(s, pos);
      if (auto after = strip_separator(s.substr(start))) {
        return std::make_pair(start, s.size() - start - after->size());
      }
    }
    return std::nullopt;
  }

  bool is_section_header(std::string_view line, const std::string& label) const {
    auto m = match_label(line, label);
    return m && m->rest.empty();
  }

  bool is_any_header(std::string_view line) const {
    return match_label(line, title_).has_value() || is_section_header(line, ingredients_) ||
           is_section_header(line, procedures_);
  }

  const std::string& title() const { return title_; }
  const std::string& ingredients() const { return ingredients_; }
  const std::string& procedures() const { return procedures_; }

 private:
  std::string title_;
  std::string ingredients_;
  std::string procedures_;
  std::string separator_;
};

std::optional<IngredientEntry> parse_ingredient_line(std::string_view line, const LineMatcher& matcher) {
  std::string_view s = text::trim(line);
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  const char32_t first = text::next_code_point(s, pos);
  const bool bullet = is_one_of(first, {'-', '*', 0xFF0D /*－*/, 0x30FB /*・*/, 0x2022 /*•*/, 0x25CF /*●*/,
                                        0x25CB /*○*/, 0x2010 /*‐*/});
  if (bullet) s = text::trim(s.substr(pos));
  const auto sep = matcher.find_separator(s);
  if (!bullet && !sep) return std::nullopt;
  IngredientEntry entry;
  if (sep) {
    entry.name = text::trim_copy(s.substr(0, sep->first));
    entry.quantity = text::trim_copy(s.substr(sep->first + sep->second));
  } else {
    entry.name = std::string(s);
  }
  if (entry.name.empty()) return std::nullopt;
  return entry;
}

std::optional<std::string> parse_step_line(std::string_view line) {
  std::string_view s = text::trim(line);
  std::size_t pos = 0;
  std::size_t digits_end = 0;
  bool circled = false;
  while (pos < s.size()) {
    std::size_t next = pos;
    const char32_t cp = text::next_code_point(s, next);
    if ((cp >= '0' && cp <= '9') || (cp >= 0xFF10 && cp <= 0xFF19)) {
      pos = digits_end = next;
      continue;
    }
    if (digits_end == 0 && cp >= 0x2460 && cp <= 0x2473) {  // ①..⑳
      pos = digits_end = next;
      circled = true;
    }
    break;
  }
  if (digits_end == 0) return std::nullopt;
  std::string_view rest = s.substr(digits_end);
  if (!circled) {
    std::size_t next = 0;
    if (rest.empty()) return std::nullopt;
    const char32_t mark = text::next_code_point(rest, next);
    if (!is_one_of(mark, {'.', ')', ':', 0xFF0E /*．*/, 0xFF09 /*）*/, 0x3001 /*、*/, 0xFF1A /*：*/})) {
      return std::nullopt;
    }
    rest = rest.substr(next);
  }
  rest = text::trim(rest);
  if (rest.empty()) return std::nullopt;
  return std::string(rest);
}

// Removes a Markdown code fence that wraps the whole output.
std::string_view strip_code_fence(std::string_view s) {
  std::string_view t = text::trim(s);
  if (!text::starts_with(t, "```")) return s;
  const auto first_nl = t.find('\n');
  if (first_nl == std::string_view::npos) return std::string_view();
  t = t.substr(first_nl + 1);
  const std::string_view trimmed = text::trim(t);
  if (trimmed.size() >= 3 && trimmed.substr(trimmed.size() - 3) == "```") {
    t = trimmed.substr(0, trimmed.size() - 3);
  }
  return t;
}

bool is_refusal(std::string_view body, const TemplateConfig& t) {
  const std::string normalized = text::nfkc(text::trim(body));
  for (const auto& prefix : t.refusal_prefixes()) {
    const std::string p = text::nfkc(text::trim(prefix));
    if (!p.empty() && text::starts_with(normalized, p)) return true;
  }
  return false;
}

enum class Section { None, Ingredients, Procedures, Ignored };

void extract_elements(std::string_view body, const LineMatcher& matcher, ParsedOutput& out) {
  const auto lines = text::split_lines(body);
  std::optional<std::string> title;
  std::vector<IngredientEntry> ingredients;
  std::vector<std::string> steps;
  bool saw_ingredients = false;
  bool saw_procedures = false;
  bool title_pending = false;  // "タイトル:" with the title on the next line
  Section section = Section::None;

  for (const auto& line : lines) {
    const std::string_view content = text::trim(line);
    if (content.empty()) continue;

    if (title_pending) {
      title_pending = false;
      if (!matcher.is_any_header(content)) {
        title = std::string(content);
        continue;
      }
    }
    if (matcher.is_section_header(content, matcher.ingredients())) {
      section = saw_ingredients ? Section::Ignored : Section::Ingredients;
      saw_ingredients = true;
      continue;
    }
    if (matcher.is_section_header(content, matcher.procedures())) {
      section = saw_procedures ? Section::Ignored : Section::Procedures;
      saw_procedures = true;
      continue;
    }
    if (auto m = matcher.match_label(content, matcher.title()); m && (m->had_separator || m->rest.empty())) {
      if (!title) {
        if (m->rest.empty()) {
          title_pending = true;
        } else {
          title = std::string(m->rest);
        }
      }
      section = Section::None;
      continue;
    }
    if (section == Section::Ingredients) {
      if (auto entry = parse_ingredient_line(content, matcher)) ingredients.push_back(std::move(*entry));
    } else if (section == Section::Procedures) {
      if (auto step = parse_step_line(content)) steps.push_back(std::move(*step));
    }
  }

  if (title && !title->empty()) {
    out.title = std::move(title);
  } else {
    out.element_errors.insert(Element::Title);
  }
  if (!ingredients.empty()) {
    out.ingredients = std::move(ingredients);
  } else {
    out.element_errors.insert(Element::Ingredients);
  }
  if (!steps.empty()) {
    out.steps = std::move(steps);
  } else {
    out.element_errors.insert(Element::Procedures);
  }
}

}  // namespace

ParsedOutput parse_generated(std::string_view text, const TemplateConfig& templates, const ParseOptions& options) {
  ParsedOutput out;
  out.raw = std::string(text);
  if (is_refusal(strip_code_fence(text), templates)) {
    out.classification = Classification::Refusal;
    return out;
  }
  out.classification = Classification::Completed;

  std::string_view body = text;
  const auto spans = metrics::tokenize_spans(text, options.tokenizer_id);
  auto diag = detect_repetition_in_spans(spans, std::max<std::size_t>(options.min_repeats, 2),
                                         std::max<std::size_t>(options.window_tokens, 1), options.mask_digits);
  if (!diag.loop_detected) diag.salvage_boundary = text.size();
  if (diag.loop_detected && options.salvage) body = text.substr(0, diag.salvage_boundary);
  out.repetition = diag;

  const LineMatcher matcher(templates);
  extract_elements(strip_code_fence(body), matcher, out);
  return out;
}

std::string element_or_empty(const ParsedOutput& parsed, Element element) {
  if (!parsed.completed() || parsed.has_error(element)) return "";
  switch (element) {
    case Element::Title:
      return parsed.title.value_or("");
    case Element::Ingredients: {
      std::vector<std::string> lines;
      for (const auto& e : parsed.ingredients.value_or(std::vector<IngredientEntry>{})) {
        lines.push_back(e.quantity.empty() ? e.name : e.name + ": " + e.quantity);
      }
      return text::join(lines, "\n");
    }
    case Element::Procedures:
      return text::join(parsed.steps.value_or(std::vector<std::string>{}), "\n");
  }
  return "";
}

std::vector<GeneratedSample> load_generated(const std::filesystem::path& path) {
  std::vector<GeneratedSample> samples;
  for (const auto& row : read_jsonl(path)) {
    try {
      samples.push_back({row.at("sample_id").get<std::string>(), row.at("generated_text").get<std::string>()});
    } catch (const json::exception& e) {
      throw DataError("malformed generated-output record in " + path.string() + ": " + e.what());
    }
  }
  return samples;
}

json parsed_to_json(const ParsedOutput& parsed, const std::string& sample_id) {
  json row;
  row["sample_id"] = sample_id;
  row["classification"] = to_string(parsed.classification);
  row["title"] = parsed.title ? json(*parsed.title) : json(nullptr);
  if (parsed.ingredients) {
    json items = json::array();
    for (const auto& e : *parsed.ingredients) items.push_back({{"name", e.name}, {"quantity", e.quantity}});
    row["ingredients"] = std::move(items);
  } else {
    row["ingredients"] = nullptr;
  }
  row["steps"] = parsed.steps ? json(*parsed.steps) : json(nullptr);
  json errors = json::array();
  for (auto e : parsed.element_errors) errors.push_back(to_string(e));
  row["element_errors"] = std::move(errors);
  if (parsed.repetition) {
    const auto& r = *parsed.repetition;
    row["repetition"] = {{"loop_detected", r.loop_detected}, {"period_tokens", r.period_tokens},
                         {"repeats", r.repeats},             {"loop_start", r.loop_start},
                         {"salvage_boundary", r.salvage_boundary}};
  } else {
    row["repetition"] = nullptr;
  }
  row["raw"] = parsed.raw;
  return row;
}

ParsedOutput parsed_from_json(const json& row) {
  try {
    ParsedOutput p;
    p.classification = row.at("classification").get<std::string>() == "refusal" ? Classification::Refusal
                                                                                : Classification::Completed;
    if (!row.at("title").is_null()) p.title = row["title"].get<std::string>();
    if (!row.at("ingredients").is_null()) {
      std::vector<IngredientEntry> items;
      for (const auto& e : row["ingredients"]) {
        items.push_back({e.at("name").get<std::string>(), e.at("quantity").get<std::string>()});
      }
      p.ingredients = std::move(items);
    }
    if (!row.at("steps").is_null()) p.steps = row["steps"].get<std::vector<std::string>>();
    for (const auto& e : row.at("element_errors")) p.element_errors.insert(element_from_string(e.get<std::string>()));
    if (!row.at("repetition").is_null()) {
      const auto& r = row["repetition"];
      p.repetition = RepetitionDiagnostic{r.at("loop_detected").get<bool>(), r.at("period_tokens").get<std::size_t>(),
                                          r.at("repeats").get<std::size_t>(), r.at("loop_start").get<std::size_t>(),
                                          r.at("salvage_boundary").get<std::size_t>()};
    }
    p.raw = row.at("raw").get<std::string>();
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed parsed-output record: ") + e.what());
  }
}

}  // namespace recipebench::parser
