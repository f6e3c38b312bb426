#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "recipebench/jsonl.hpp"

namespace recipebench::dataset {

struct IngredientEntry {
  std::string name;      // free-form, never normalized
  std::string quantity;  // may be empty

  friend bool operator==(const IngredientEntry&, const IngredientEntry&) = default;
};

struct Recipe {
  std::string id;
  std::string title;
  std::vector<IngredientEntry> ingredients;
  std::vector<std::string> steps;
  std::string image_ref;
  std::vector<std::string> category_path;  // top level first
  std::optional<std::string> eval_category;

  const std::string& top_category() const { return category_path.front(); }
  // "c1/c2", the key used by the evaluation taxonomy.
  std::string source_category_key() const;

  friend bool operator==(const Recipe&, const Recipe&) = default;
};

struct RejectedRecord {
  std::size_t line_no = 0;
  std::string id;  // empty when the record had no usable id
  std::string reason;
};

struct RecipeCorpus {
  std::vector<Recipe> recipes;
  std::vector<RejectedRecord> rejects;

  std::size_t size() const { return recipes.size(); }
  bool empty() const { return recipes.empty(); }
};

struct CaptionRecord {
  std::string image_id;
  std::vector<std::string> captions;  // exactly five
  std::set<std::string> supercategories;
};

struct CaptionCorpus {
  std::vector<CaptionRecord> records;
  std::vector<RejectedRecord> rejects;
};

inline constexpr std::size_t kEvalCategoryCount = 50;
inline constexpr std::size_t kCaptionsPerImage = 5;

struct CategoryTaxonomy {
  std::vector<std::string> category_names;           // exactly 50, distinct
  std::map<std::string, std::string> entries;         // "c1/c2" or "c1" -> name

  // Exact "c1/c2" rule first, then a top-level "c1" rule.
  std::optional<std::string> lookup(const Recipe& recipe) const;
};

// Throws ConfigError if the file is missing or violates the taxonomy
// invariants (name count, duplicates, mapping targets).
CategoryTaxonomy load_taxonomy(const std::filesystem::path& path);
CategoryTaxonomy taxonomy_from_json(const json& doc);

// ---- corpus readers --------------------------------------------------------

using CorpusReader = std::function<RecipeCorpus(const std::filesystem::path&)>;

// Registered formats: "jsonl" and "csv".
void register_corpus_reader(const std::string& format, CorpusReader reader);
std::vector<std::string> corpus_formats();

// Throws IoError (unreadable), ConfigError (unknown format) or DataError
// (zero valid records).
RecipeCorpus load_recipes(const std::filesystem::path& path, const std::string& format = "jsonl");

// Parses one record; returns the reject reason instead of throwing.
std::optional<std::string> recipe_from_json(const json& row, Recipe& out);
json recipe_to_json(const Recipe& recipe);

void write_recipes(const std::filesystem::path& path, const std::vector<Recipe>& recipes);

CaptionCorpus load_captions(const std::filesystem::path& path);
json caption_to_json(const CaptionRecord& record);
void write_captions(const std::filesystem::path& path, const std::vector<CaptionRecord>& records);

// ---- preparation steps -----------------------------------------------------

struct SplitResult {
  RecipeCorpus train;
  RecipeCorpus test;
};

// Per top-level category, |test| = round-half-up(n * test_fraction). The
// shuffle inside a category is seeded from (seed, category id).
SplitResult split_by_category(const RecipeCorpus& corpus, double test_fraction, std::uint64_t seed);

std::size_t stratum_test_size(std::size_t n, double test_fraction);

struct ExcludedImage {
  std::string recipe_id;
  std::string reason;  // "missing file" | "zero-length file" | "unrecognized image header"
};

struct ImageFilterResult {
  RecipeCorpus kept;
  std::vector<ExcludedImage> excluded;
};

// Magic-byte probe for JPEG, PNG, GIF, WebP and BMP. Returns the reason the
// file is unreadable, or nullopt.
std::optional<std::string> probe_image(const std::filesystem::path& file);

ImageFilterResult exclude_broken_images(const RecipeCorpus& corpus, const std::filesystem::path& image_root);

struct AssignResult {
  RecipeCorpus corpus;
  std::vector<std::string> unmapped;  // sorted, unique source keys
};

AssignResult assign_eval_categories(const RecipeCorpus& corpus, const CategoryTaxonomy& taxonomy);

struct EvalSet {
  std::vector<Recipe> samples;                       // sorted by (category, id)
  std::map<std::string, std::size_t> shortfalls;     // category -> missing count
  std::size_t per_category = 0;

  std::map<std::string, std::size_t> counts_by_category() const;
  const Recipe* find(const std::string& sample_id) const;
};

EvalSet sample_balanced(const RecipeCorpus& test_corpus, std::size_t per_category, std::uint64_t seed);

// Recipes JSONL with eval_category set on every row.
EvalSet load_evalset(const std::filesystem::path& path);

inline const std::set<std::string>& default_excluded_supercategories() {
  static const std::set<std::string> kDefault{"kitchen", "food"};
  return kDefault;
}

std::vector<CaptionRecord> filter_nonfood_captions(const std::vector<CaptionRecord>& captions,
                                                   const std::set<std::string>& excluded = default_excluded_supercategories());

}  // namespace recipebench::dataset
