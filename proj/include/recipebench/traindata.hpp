#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "recipebench/dataset.hpp"
#include "recipebench/templates.hpp"

namespace recipebench::traindata {

enum class Regime { R, RNF, RMQ };

const char* to_string(Regime regime);  // "R", "R/NF", "R/MQ"
Regime regime_from_string(const std::string& name);
// File-name friendly tag: "R", "R_NF", "R_MQ".
const char* file_tag(Regime regime);

struct TrainingExample {
  std::string image_ref;
  std::string query;  // empty exactly for QueryPattern::EmptyFull
  std::string answer;
  Regime regime = Regime::R;
  QueryPattern pattern = QueryPattern::EmptyFull;
  bool is_food = true;
  std::string source_id;  // recipe id or caption image id

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

std::string render_recipe_text(const dataset::Recipe& recipe, const TemplateConfig& templates = {});

// Only the selected sections, in canonical order.
std::string render_recipe_elements(const dataset::Recipe& recipe, ElementSelector selector,
                                   const TemplateConfig& templates = {});

enum class RefusalMode { AllFive, Single };

// AllFive embeds all five captions in order (DataError otherwise); Single
// embeds one caption chosen by `seed`.
std::string render_refusal(const std::vector<std::string>& captions, RefusalMode mode, std::uint64_t seed,
                           const TemplateConfig& templates = {});

std::vector<TrainingExample> build_regime_r(const dataset::RecipeCorpus& corpus, const TemplateConfig& templates = {});

std::vector<TrainingExample> build_regime_rnf(const dataset::RecipeCorpus& corpus,
                                              const std::vector<dataset::CaptionRecord>& nonfood,
                                              const TemplateConfig& templates = {});

std::vector<TrainingExample> build_regime_rmq(const dataset::RecipeCorpus& corpus,
                                              const std::vector<dataset::CaptionRecord>& nonfood, std::uint64_t seed,
                                              const TemplateConfig& templates = {});

json example_to_json(const TrainingExample& example, const TemplateConfig& templates = {});
TrainingExample example_from_json(const json& row, const TemplateConfig& templates = {});

std::size_t write_examples(const std::vector<TrainingExample>& examples, const std::filesystem::path& path,
                           const TemplateConfig& templates = {});
std::vector<TrainingExample> read_examples(const std::filesystem::path& path, const TemplateConfig& templates = {});

}  // namespace recipebench::traindata
