#include "recipebench/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

#include "recipebench/error.hpp"
#include "recipebench/rng.hpp"
#include "recipebench/text.hpp"

namespace recipebench::dataset {

namespace fs = std::filesystem;

std::string Recipe::source_category_key() const {
  if (category_path.size() < 2) return category_path.empty() ? std::string() : category_path[0];
  return category_path[0] + "/" + category_path[1];
}

std::optional<std::string> CategoryTaxonomy::lookup(const Recipe& recipe) const {
  if (recipe.category_path.empty()) return std::nullopt;
  if (auto it = entries.find(recipe.source_category_key()); it != entries.end()) return it->second;
  if (auto it = entries.find(recipe.category_path[0]); it != entries.end()) return it->second;
  return std::nullopt;
}

CategoryTaxonomy taxonomy_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("categories") || !doc.contains("mapping")) {
    throw ConfigError("taxonomy must be an object with \"categories\" and \"mapping\"");
  }
  CategoryTaxonomy taxonomy;
  for (const auto& name : doc.at("categories")) {
    if (!name.is_string()) throw ConfigError("taxonomy category names must be strings");
    taxonomy.category_names.push_back(name.get<std::string>());
  }
  std::set<std::string> distinct(taxonomy.category_names.begin(), taxonomy.category_names.end());
  if (distinct.size() != taxonomy.category_names.size()) {
    throw ConfigError("taxonomy contains duplicate category names");
  }
  if (taxonomy.category_names.size() != kEvalCategoryCount) {
    throw ConfigError("taxonomy must list exactly " + std::to_string(kEvalCategoryCount) +
                      " evaluation categories, found " + std::to_string(taxonomy.category_names.size()));
  }
  for (const auto& [source, target] : doc.at("mapping").items()) {
    if (!target.is_string()) throw ConfigError("taxonomy mapping values must be strings");
    const auto name = target.get<std::string>();
    if (!distinct.count(name)) {
      throw ConfigError("taxonomy maps \"" + source + "\" to unknown category \"" + name + "\"");
    }
    taxonomy.entries.emplace(source, name);
  }
  return taxonomy;
}

CategoryTaxonomy load_taxonomy(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("taxonomy file not found: " + path.string());
  try {
    return taxonomy_from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError("invalid taxonomy file " + path.string() + ": " + e.what());
  }
}

// ---- readers ---------------------------------------------------------------

namespace {

bool nonblank_string(const json& row, const char* key) {
  return row.contains(key) && row.at(key).is_string() && !text::trim(row.at(key).get_ref<const std::string&>()).empty();
}

}  // namespace

std::optional<std::string> recipe_from_json(const json& row, Recipe& out) {
  if (!row.is_object()) return "record is not an object";
  if (!nonblank_string(row, "id")) return "missing id";
  if (!nonblank_string(row, "title")) return "missing title";
  out = Recipe{};
  out.id = row["id"].get<std::string>();
  out.title = row["title"].get<std::string>();

  if (!row.contains("ingredients") || !row["ingredients"].is_array()) return "missing ingredients";
  for (const auto& item : row["ingredients"]) {
    if (!item.is_object() || !item.contains("name") || !item["name"].is_string()) return "malformed ingredient";
    IngredientEntry entry;
    entry.name = item["name"].get<std::string>();
    if (text::trim(entry.name).empty()) return "empty ingredient name";
    if (item.contains("quantity") && !item["quantity"].is_null()) {
      if (!item["quantity"].is_string()) return "malformed ingredient";
      entry.quantity = item["quantity"].get<std::string>();
    }
    out.ingredients.push_back(std::move(entry));
  }

  if (!row.contains("steps") || !row["steps"].is_array() || row["steps"].empty()) return "missing steps";
  for (const auto& step : row["steps"]) {
    if (!step.is_string()) return "malformed step";
    out.steps.push_back(step.get<std::string>());
  }

  if (!nonblank_string(row, "image")) return "missing image";
  out.image_ref = row["image"].get<std::string>();

  if (!row.contains("category") || !row["category"].is_array() || row["category"].empty()) return "missing category";
  for (const auto& level : row["category"]) {
    if (!level.is_string() && !level.is_number_integer()) return "malformed category";
    out.category_path.push_back(level.is_string() ? level.get<std::string>() : std::to_string(level.get<long long>()));
  }
  if (out.category_path.size() > 3) return "malformed category";
  if (text::trim(out.category_path[0]).empty()) return "missing category";

  if (row.contains("eval_category") && row["eval_category"].is_string()) {
    out.eval_category = row["eval_category"].get<std::string>();
  }
  return std::nullopt;
}

json recipe_to_json(const Recipe& recipe) {
  json ingredients = json::array();
  for (const auto& entry : recipe.ingredients) {
    ingredients.push_back({{"name", entry.name}, {"quantity", entry.quantity}});
  }
  json row = {
      {"id", recipe.id},
      {"title", recipe.title},
      {"ingredients", std::move(ingredients)},
      {"steps", recipe.steps},
      {"image", recipe.image_ref},
      {"category", recipe.category_path},
  };
  if (recipe.eval_category) row["eval_category"] = *recipe.eval_category;
  return row;
}

void write_recipes(const fs::path& path, const std::vector<Recipe>& recipes) {
  std::vector<json> rows;
  rows.reserve(recipes.size());
  for (const auto& r : recipes) rows.push_back(recipe_to_json(r));
  write_jsonl(path, rows);
}

namespace {

// Shared by every reader: appends a record unless its id repeats.
void accept_record(RecipeCorpus& corpus, std::unordered_set<std::string>& seen, std::size_t line_no, Recipe recipe) {
  if (!seen.insert(recipe.id).second) {
    corpus.rejects.push_back({line_no, recipe.id, "duplicate id"});
    return;
  }
  corpus.recipes.push_back(std::move(recipe));
}

RecipeCorpus read_jsonl_corpus(const fs::path& path) {
  RecipeCorpus corpus;
  std::unordered_set<std::string> seen;
  for (const auto& line : read_lines(path)) {
    json row;
    try {
      row = json::parse(line.text);
    } catch (const json::parse_error&) {
      corpus.rejects.push_back({line.line_no, "", "invalid json"});
      continue;
    }
    Recipe recipe;
    if (auto reason = recipe_from_json(row, recipe)) {
      std::string id = row.is_object() && row.contains("id") && row["id"].is_string() ? row["id"].get<std::string>() : "";
      corpus.rejects.push_back({line.line_no, std::move(id), *reason});
      continue;
    }
    accept_record(corpus, seen, line.line_no, std::move(recipe));
  }
  return corpus;
}

// RFC 4180 fields; quoted fields may contain commas and doubled quotes but
// not newlines.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Header: id,title,ingredients,steps,image,category1,category2,category3.
// ingredients is "name:quantity|name:quantity", steps is "step|step".
RecipeCorpus read_csv_corpus(const fs::path& path) {
  static const std::array<std::string, 5> kRequired{"id", "title", "ingredients", "steps", "image"};
  const auto lines = read_lines(path);
  RecipeCorpus corpus;
  if (lines.empty()) return corpus;
  const auto header = split_csv_row(lines.front().text);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[text::trim_copy(header[i])] = i;
  for (const auto& name : kRequired) {
    if (!col.count(name)) throw DataError(path.string() + ": CSV header lacks column \"" + name + "\"");
  }

  std::unordered_set<std::string> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_csv_row(lines[li].text);
    auto get = [&](const std::string& name) -> std::string {
      auto it = col.find(name);
      return it != col.end() && it->second < fields.size() ? fields[it->second] : std::string();
    };
    json row = {{"id", get("id")}, {"title", get("title")}, {"image", get("image")}};
    json ingredients = json::array();
    for (const auto& item : split_on(get("ingredients"), '|')) {
      const auto colon = item.find(':');
      ingredients.push_back({{"name", item.substr(0, colon)},
                             {"quantity", colon == std::string::npos ? "" : item.substr(colon + 1)}});
    }
    row["ingredients"] = std::move(ingredients);
    row["steps"] = split_on(get("steps"), '|');
    json category = json::array();
    for (const char* level : {"category1", "category2", "category3"}) {
      const auto value = get(level);
      if (!value.empty()) category.push_back(value);
    }
    row["category"] = std::move(category);

    Recipe recipe;
    if (auto reason = recipe_from_json(row, recipe)) {
      corpus.rejects.push_back({lines[li].line_no, get("id"), *reason});
      continue;
    }
    accept_record(corpus, seen, lines[li].line_no, std::move(recipe));
  }
  return corpus;
}

struct ReaderRegistry {
  std::mutex mutex;
  std::map<std::string, CorpusReader> readers{{"jsonl", read_jsonl_corpus}, {"csv", read_csv_corpus}};
};

ReaderRegistry& reader_registry() {
  static ReaderRegistry registry;
  return registry;
}

}  // namespace

void register_corpus_reader(const std::string& format, CorpusReader reader) {
  auto& registry = reader_registry();
  std::lock_guard lock(registry.mutex);
  registry.readers[format] = std::move(reader);
}

std::vector<std::string> corpus_formats() {
  auto& registry = reader_registry();
  std::lock_guard lock(registry.mutex);
  std::vector<std::string> out;
  for (const auto& [name, _] : registry.readers) out.push_back(name);
  return out;
}

RecipeCorpus load_recipes(const fs::path& path, const std::string& format) {
  CorpusReader reader;
  {
    auto& registry = reader_registry();
    std::lock_guard lock(registry.mutex);
    auto it = registry.readers.find(format);
    if (it == registry.readers.end()) throw ConfigError("unknown corpus format: " + format);
    reader = it->second;
  }
  RecipeCorpus corpus = reader(path);
  if (corpus.recipes.empty()) {
    throw DataError("no valid recipes in " + path.string() + " (" + std::to_string(corpus.rejects.size()) + " rejected)");
  }
  return corpus;
}

CaptionCorpus load_captions(const fs::path& path) {
  CaptionCorpus corpus;
  for (const auto& line : read_lines(path)) {
    json row;
    try {
      row = json::parse(line.text);
    } catch (const json::parse_error&) {
      corpus.rejects.push_back({line.line_no, "", "invalid json"});
      continue;
    }
    if (!row.is_object() || !nonblank_string(row, "image_id")) {
      corpus.rejects.push_back({line.line_no, "", "missing image_id"});
      continue;
    }
    CaptionRecord record;
    record.image_id = row["image_id"].get<std::string>();
    const auto& captions = row.value("captions", json::array());
    if (!captions.is_array() || captions.size() != kCaptionsPerImage ||
        !std::all_of(captions.begin(), captions.end(), [](const json& c) { return c.is_string(); })) {
      corpus.rejects.push_back({line.line_no, record.image_id, "expected exactly 5 captions"});
      continue;
    }
    record.captions = captions.get<std::vector<std::string>>();
    if (row.contains("supercategories") && row["supercategories"].is_array()) {
      for (const auto& s : row["supercategories"]) {
        if (s.is_string()) record.supercategories.insert(s.get<std::string>());
      }
    }
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

json caption_to_json(const CaptionRecord& record) {
  return {{"image_id", record.image_id},
          {"captions", record.captions},
          {"supercategories", std::vector<std::string>(record.supercategories.begin(), record.supercategories.end())}};
}

void write_captions(const fs::path& path, const std::vector<CaptionRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(caption_to_json(r));
  write_jsonl(path, rows);
}

// ---- split -------------------------------------------------------------------

std::size_t stratum_test_size(std::size_t n, double test_fraction) {
  // Round half up; the epsilon absorbs representation error in products
  // such as 5 * 0.2 or 25 * 0.1.
  const double exact = static_cast<double>(n) * test_fraction;
  const auto k = static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
  return std::min(k, n);
}

SplitResult split_by_category(const RecipeCorpus& corpus, double test_fraction, std::uint64_t seed) {
  if (corpus.recipes.empty()) throw DataError("cannot split an empty corpus");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.recipes.size(); ++i) {
    const auto& recipe = corpus.recipes[i];
    if (recipe.category_path.empty()) throw DataError("recipe " + recipe.id + " has no top-level category");
    strata[recipe.top_category()].push_back(i);
  }

  std::vector<char> in_test(corpus.recipes.size(), 0);
  for (auto& [category, members] : strata) {
    // Canonical order first so the draw depends on content, not file order.
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return corpus.recipes[a].id < corpus.recipes[b].id; });
    Rng rng(derive_seed(seed, "split/" + category));
    rng.shuffle(members);
    const std::size_t k = stratum_test_size(members.size(), test_fraction);
    for (std::size_t j = 0; j < k; ++j) in_test[members[j]] = 1;
  }

  SplitResult result;
  for (std::size_t i = 0; i < corpus.recipes.size(); ++i) {
    (in_test[i] ? result.test : result.train).recipes.push_back(corpus.recipes[i]);
  }
  return result;
}

// ---- images --------------------------------------------------------------------

std::optional<std::string> probe_image(const fs::path& file) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) return "missing file";
  const auto size = fs::file_size(file, ec);
  if (ec) return "missing file";
  if (size == 0) return "zero-length file";

  std::array<unsigned char, 12> head{};
  std::ifstream in(file, std::ios::binary);
  if (!in) return "missing file";
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  auto has = [&](std::size_t offset, std::initializer_list<unsigned char> bytes) {
    if (offset + bytes.size() > got) return false;
    return std::equal(bytes.begin(), bytes.end(), head.begin() + static_cast<std::ptrdiff_t>(offset));
  };
  const bool ok = has(0, {0xFF, 0xD8, 0xFF}) ||                                  // JPEG
                  has(0, {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A}) ||       // PNG
                  has(0, {'G', 'I', 'F', '8', '7', 'a'}) ||                     // GIF
                  has(0, {'G', 'I', 'F', '8', '9', 'a'}) ||
                  (has(0, {'R', 'I', 'F', 'F'}) && has(8, {'W', 'E', 'B', 'P'})) ||  // WebP
                  (has(0, {'B', 'M'}) && got >= 6);                              // BMP
  if (!ok) return "unrecognized image header";
  return std::nullopt;
}

ImageFilterResult exclude_broken_images(const RecipeCorpus& corpus, const fs::path& image_root) {
  std::error_code ec;
  if (!fs::is_directory(image_root, ec)) throw IoError("image root is not a readable directory: " + image_root.string());
  ImageFilterResult result;
  result.kept.rejects = corpus.rejects;
  for (const auto& recipe : corpus.recipes) {
    if (auto reason = probe_image(image_root / recipe.image_ref)) {
      result.excluded.push_back({recipe.id, *reason});
    } else {
      result.kept.recipes.push_back(recipe);
    }
  }
  return result;
}

// ---- evaluation categories -------------------------------------------------------

AssignResult assign_eval_categories(const RecipeCorpus& corpus, const CategoryTaxonomy& taxonomy) {
  AssignResult result;
  result.corpus = corpus;
  std::set<std::string> unmapped;
  for (auto& recipe : result.corpus.recipes) {
    recipe.eval_category = taxonomy.lookup(recipe);
    if (!recipe.eval_category) unmapped.insert(recipe.source_category_key());
  }
  result.unmapped.assign(unmapped.begin(), unmapped.end());
  return result;
}

std::map<std::string, std::size_t> EvalSet::counts_by_category() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : samples) ++counts[r.eval_category.value_or("")];
  return counts;
}

const Recipe* EvalSet::find(const std::string& sample_id) const {
  for (const auto& r : samples) {
    if (r.id == sample_id) return &r;
  }
  return nullptr;
}

EvalSet sample_balanced(const RecipeCorpus& test_corpus, std::size_t per_category, std::uint64_t seed) {
  std::map<std::string, std::vector<const Recipe*>> by_category;
  for (const auto& recipe : test_corpus.recipes) {
    if (recipe.eval_category) by_category[*recipe.eval_category].push_back(&recipe);
  }
  if (by_category.empty()) throw DataError("no recipe carries an evaluation category");

  EvalSet evalset;
  evalset.per_category = per_category;
  for (auto& [category, members] : by_category) {
    std::sort(members.begin(), members.end(), [](const Recipe* a, const Recipe* b) { return a->id < b->id; });
    Rng rng(derive_seed(seed, "sample/" + category));
    rng.shuffle(members);
    const std::size_t take = std::min(per_category, members.size());
    std::vector<const Recipe*> chosen(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end(), [](const Recipe* a, const Recipe* b) { return a->id < b->id; });
    for (const Recipe* r : chosen) evalset.samples.push_back(*r);
    if (take < per_category) evalset.shortfalls[category] = per_category - take;
  }
  return evalset;
}

EvalSet load_evalset(const fs::path& path) {
  EvalSet evalset;
  std::unordered_set<std::string> seen;
  for (const auto& line : read_lines(path)) {
    json row;
    try {
      row = json::parse(line.text);
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line.line_no) + ": invalid JSON");
    }
    Recipe recipe;
    if (auto reason = recipe_from_json(row, recipe)) {
      throw DataError(path.string() + ":" + std::to_string(line.line_no) + ": " + *reason);
    }
    if (!recipe.eval_category) {
      throw DataError(path.string() + ":" + std::to_string(line.line_no) + ": sample lacks eval_category");
    }
    if (!seen.insert(recipe.id).second) throw DataError("duplicate sample id in eval set: " + recipe.id);
    evalset.samples.push_back(std::move(recipe));
  }
  if (evalset.samples.empty()) throw DataError("empty eval set: " + path.string());
  for (const auto& [_, n] : evalset.counts_by_category()) evalset.per_category = std::max(evalset.per_category, n);
  return evalset;
}

std::vector<CaptionRecord> filter_nonfood_captions(const std::vector<CaptionRecord>& captions,
                                                   const std::set<std::string>& excluded) {
  std::vector<CaptionRecord> kept;
  for (const auto& record : captions) {
    const bool hit = std::any_of(record.supercategories.begin(), record.supercategories.end(),
                                 [&](const std::string& s) { return excluded.count(s) > 0; });
    if (!hit) kept.push_back(record);
  }
  return kept;
}

}  // namespace recipebench::dataset
