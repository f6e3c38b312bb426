#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "recipebench/jsonl.hpp"

namespace recipebench {

// The six user-query patterns used for multi-query training data.
enum class QueryPattern { EmptyFull, AskFull, AskTitle, AskIngredients, AskProcedures, TitleGivenFull };

inline constexpr std::array<QueryPattern, 6> kAllQueryPatterns{
    QueryPattern::EmptyFull,      QueryPattern::AskFull,       QueryPattern::AskTitle,
    QueryPattern::AskIngredients, QueryPattern::AskProcedures, QueryPattern::TitleGivenFull};

const char* to_string(QueryPattern pattern);
QueryPattern query_pattern_from_string(const std::string& name);

// Which recipe elements an answer carries.
struct ElementSelector {
  bool title = false;
  bool ingredients = false;
  bool procedures = false;
};

ElementSelector answer_selector(QueryPattern pattern);

// Wording of the canonical recipe text, the refusal text, and the user
// queries. Rendering (traindata) and parsing (parser) share one instance.
struct TemplateConfig {
  std::string title_label = "タイトル";
  std::string ingredients_label = "材料";
  std::string procedures_label = "作り方";
  std::string separator = ": ";          // after labels and between name and quantity
  std::string ingredient_bullet = "- ";
  std::string step_suffix = ". ";         // "<n>. <step>"
  std::string apology = "申し訳ありませんが、この画像は料理の画像ではないため、レシピを生成できません。";
  std::string caption_label = "画像の説明";
  std::vector<std::string> extra_refusal_prefixes;  // model-specific refusal openings
  std::string image_token = "<image>";
  std::string query_ask_full = "この料理のレシピを教えてください。";
  std::string query_ask_title = "この料理の名前を教えてください。";
  std::string query_ask_ingredients = "この料理の材料を教えてください。";
  std::string query_ask_procedures = "この料理の作り方を教えてください。";
  std::string query_title_given_full = "この料理は「{title}」です。レシピを教えてください。";

  // Query text for a pattern; {title} is substituted for TitleGivenFull.
  std::string query_for(QueryPattern pattern, const std::string& title) const;

  // Every prefix that marks a refusal (the apology first).
  std::vector<std::string> refusal_prefixes() const;
};

TemplateConfig templates_from_json(const json& doc);
json templates_to_json(const TemplateConfig& config);
// Missing keys keep their defaults; throws ConfigError on unreadable files.
TemplateConfig load_templates(const std::filesystem::path& path);

}  // namespace recipebench
