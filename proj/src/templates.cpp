#include "recipebench/templates.hpp"

#include "recipebench/error.hpp"

namespace recipebench {

const char* to_string(QueryPattern pattern) {
  switch (pattern) {
    case QueryPattern::EmptyFull: return "EMPTY_FULL";
    case QueryPattern::AskFull: return "ASK_FULL";
    case QueryPattern::AskTitle: return "ASK_TITLE";
    case QueryPattern::AskIngredients: return "ASK_INGREDIENTS";
    case QueryPattern::AskProcedures: return "ASK_PROCEDURES";
    case QueryPattern::TitleGivenFull: return "TITLE_GIVEN_FULL";
  }
  return "EMPTY_FULL";
}

QueryPattern query_pattern_from_string(const std::string& name) {
  for (auto p : kAllQueryPatterns) {
    if (name == to_string(p)) return p;
  }
  throw DataError("unknown query pattern: " + name);
}

ElementSelector answer_selector(QueryPattern pattern) {
  switch (pattern) {
    case QueryPattern::AskTitle: return {true, false, false};
    case QueryPattern::AskIngredients: return {false, true, false};
    case QueryPattern::AskProcedures: return {false, false, true};
    default: return {true, true, true};
  }
}

std::string TemplateConfig::query_for(QueryPattern pattern, const std::string& title) const {
  switch (pattern) {
    case QueryPattern::EmptyFull: return "";
    case QueryPattern::AskFull: return query_ask_full;
    case QueryPattern::AskTitle: return query_ask_title;
    case QueryPattern::AskIngredients: return query_ask_ingredients;
    case QueryPattern::AskProcedures: return query_ask_procedures;
    case QueryPattern::TitleGivenFull: {
      std::string q = query_title_given_full;
      static constexpr std::string_view kSlot = "{title}";
      for (auto pos = q.find(kSlot); pos != std::string::npos; pos = q.find(kSlot, pos + title.size())) {
        q.replace(pos, kSlot.size(), title);
      }
      return q;
    }
  }
  return "";
}

std::vector<std::string> TemplateConfig::refusal_prefixes() const {
  std::vector<std::string> out{apology};
  out.insert(out.end(), extra_refusal_prefixes.begin(), extra_refusal_prefixes.end());
  return out;
}

namespace {

// Field table shared by the reader and the writer.
template <class Fn>
void for_each_string_field(TemplateConfig& c, Fn&& fn) {
  fn("title_label", c.title_label);
  fn("ingredients_label", c.ingredients_label);
  fn("procedures_label", c.procedures_label);
  fn("separator", c.separator);
  fn("ingredient_bullet", c.ingredient_bullet);
  fn("step_suffix", c.step_suffix);
  fn("apology", c.apology);
  fn("caption_label", c.caption_label);
  fn("image_token", c.image_token);
  fn("query_ask_full", c.query_ask_full);
  fn("query_ask_title", c.query_ask_title);
  fn("query_ask_ingredients", c.query_ask_ingredients);
  fn("query_ask_procedures", c.query_ask_procedures);
  fn("query_title_given_full", c.query_title_given_full);
}

}  // namespace

TemplateConfig templates_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("template config must be a JSON object");
  TemplateConfig config;
  for_each_string_field(config, [&](const char* key, std::string& field) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_string()) throw ConfigError(std::string("template field must be a string: ") + key);
    field = doc[key].get<std::string>();
  });
  if (doc.contains("extra_refusal_prefixes")) {
    config.extra_refusal_prefixes = doc["extra_refusal_prefixes"].get<std::vector<std::string>>();
  }
  if (config.apology.empty()) throw ConfigError("template apology must not be empty");
  if (config.title_label.empty() || config.ingredients_label.empty() || config.procedures_label.empty()) {
    throw ConfigError("section labels must not be empty");
  }
  return config;
}

json templates_to_json(const TemplateConfig& config) {
  json doc = json::object();
  TemplateConfig copy = config;
  for_each_string_field(copy, [&](const char* key, std::string& field) { doc[key] = field; });
  doc["extra_refusal_prefixes"] = config.extra_refusal_prefixes;
  return doc;
}

TemplateConfig load_templates(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("template file not found: " + path.string());
  try {
    return templates_from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError("invalid template file " + path.string() + ": " + e.what());
  }
}

}  // namespace recipebench
