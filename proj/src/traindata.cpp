#include "recipebench/traindata.hpp"

#include <algorithm>

#include "recipebench/error.hpp"
#include "recipebench/rng.hpp"
#include "recipebench/text.hpp"

namespace recipebench::traindata {

using dataset::CaptionRecord;
using dataset::Recipe;
using dataset::RecipeCorpus;

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::R: return "R";
    case Regime::RNF: return "R/NF";
    case Regime::RMQ: return "R/MQ";
  }
  return "R";
}

const char* file_tag(Regime regime) {
  switch (regime) {
    case Regime::R: return "R";
    case Regime::RNF: return "R_NF";
    case Regime::RMQ: return "R_MQ";
  }
  return "R";
}

Regime regime_from_string(const std::string& name) {
  for (auto r : {Regime::R, Regime::RNF, Regime::RMQ}) {
    if (name == to_string(r) || name == file_tag(r)) return r;
  }
  throw ConfigError("unknown regime: " + name);
}

namespace {

std::string section_header(const std::string& label, const TemplateConfig& t) {
  return label + text::trim_copy(t.separator);
}

}  // namespace

std::string render_recipe_elements(const Recipe& recipe, ElementSelector selector, const TemplateConfig& t) {
  std::vector<std::string> lines;
  if (selector.title) lines.push_back(t.title_label + t.separator + recipe.title);
  if (selector.ingredients) {
    lines.push_back(section_header(t.ingredients_label, t));
    for (const auto& entry : recipe.ingredients) {
      std::string line = t.ingredient_bullet + entry.name;
      if (!entry.quantity.empty()) line += t.separator + entry.quantity;
      lines.push_back(std::move(line));
    }
  }
  if (selector.procedures) {
    lines.push_back(section_header(t.procedures_label, t));
    for (std::size_t i = 0; i < recipe.steps.size(); ++i) {
      lines.push_back(std::to_string(i + 1) + t.step_suffix + recipe.steps[i]);
    }
  }
  return text::join(lines, "\n");
}

std::string render_recipe_text(const Recipe& recipe, const TemplateConfig& t) {
  return render_recipe_elements(recipe, {true, true, true}, t);
}

std::string render_refusal(const std::vector<std::string>& captions, RefusalMode mode, std::uint64_t seed,
                           const TemplateConfig& t) {
  if (captions.empty()) throw DataError("refusal needs at least one caption");
  std::string body;
  if (mode == RefusalMode::AllFive) {
    if (captions.size() != dataset::kCaptionsPerImage) {
      throw DataError("ALL_FIVE refusal requires exactly 5 captions, got " + std::to_string(captions.size()));
    }
    body = text::join(captions, "\n");
  } else {
    Rng rng(seed);
    body = captions[static_cast<std::size_t>(rng.uniform(captions.size()))];
  }
  return t.apology + "\n" + t.caption_label + t.separator + body;
}

namespace {

std::vector<const Recipe*> sorted_recipes(const RecipeCorpus& corpus) {
  std::vector<const Recipe*> out;
  for (const auto& r : corpus.recipes) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const Recipe* a, const Recipe* b) { return a->id < b->id; });
  return out;
}

std::vector<const CaptionRecord*> sorted_captions(const std::vector<CaptionRecord>& records) {
  std::vector<const CaptionRecord*> out;
  for (const auto& r : records) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(),
                   [](const CaptionRecord* a, const CaptionRecord* b) { return a->image_id < b->image_id; });
  return out;
}

void require_nonempty(const RecipeCorpus& corpus, const std::vector<CaptionRecord>* nonfood) {
  if (corpus.recipes.empty()) throw DataError("training corpus is empty");
  if (nonfood && nonfood->empty()) throw DataError("non-food caption set is empty");
}

TrainingExample recipe_example(const Recipe& r, Regime regime, const TemplateConfig& t) {
  return {r.image_ref, "", render_recipe_text(r, t), regime, QueryPattern::EmptyFull, true, r.id};
}

}  // namespace

std::vector<TrainingExample> build_regime_r(const RecipeCorpus& corpus, const TemplateConfig& t) {
  require_nonempty(corpus, nullptr);
  std::vector<TrainingExample> out;
  out.reserve(corpus.recipes.size());
  for (const Recipe* r : sorted_recipes(corpus)) out.push_back(recipe_example(*r, Regime::R, t));
  return out;
}

std::vector<TrainingExample> build_regime_rnf(const RecipeCorpus& corpus, const std::vector<CaptionRecord>& nonfood,
                                              const TemplateConfig& t) {
  require_nonempty(corpus, &nonfood);
  std::vector<TrainingExample> out;
  out.reserve(corpus.recipes.size() + nonfood.size());
  for (const Recipe* r : sorted_recipes(corpus)) out.push_back(recipe_example(*r, Regime::RNF, t));
  for (const CaptionRecord* c : sorted_captions(nonfood)) {
    out.push_back({c->image_id, "", render_refusal(c->captions, RefusalMode::AllFive, 0, t), Regime::RNF,
                   QueryPattern::EmptyFull, false, c->image_id});
  }
  return out;
}

std::vector<TrainingExample> build_regime_rmq(const RecipeCorpus& corpus, const std::vector<CaptionRecord>& nonfood,
                                              std::uint64_t seed, const TemplateConfig& t) {
  require_nonempty(corpus, &nonfood);
  std::vector<TrainingExample> out;
  out.reserve(corpus.recipes.size() + nonfood.size());
  for (const Recipe* r : sorted_recipes(corpus)) {
    Rng rng(derive_seed(seed, "pattern/" + r->id));
    const QueryPattern pattern = kAllQueryPatterns[static_cast<std::size_t>(rng.uniform(kAllQueryPatterns.size()))];
    out.push_back({r->image_ref, t.query_for(pattern, r->title),
                   render_recipe_elements(*r, answer_selector(pattern), t), Regime::RMQ, pattern, true, r->id});
  }
  // A non-food image has no title to give, so TitleGivenFull is not drawn.
  static constexpr std::size_t kNonfoodPatterns = kAllQueryPatterns.size() - 1;
  for (const CaptionRecord* c : sorted_captions(nonfood)) {
    Rng rng(derive_seed(seed, "pattern/" + c->image_id));
    const QueryPattern pattern = kAllQueryPatterns[static_cast<std::size_t>(rng.uniform(kNonfoodPatterns))];
    const auto refusal = render_refusal(c->captions, RefusalMode::Single, derive_seed(seed, "refusal/" + c->image_id), t);
    out.push_back({c->image_id, t.query_for(pattern, ""), refusal, Regime::RMQ, pattern, false, c->image_id});
  }
  return out;
}

json example_to_json(const TrainingExample& e, const TemplateConfig& t) {
  return {
      {"image", e.image_ref},
      {"conversations",
       json::array({{{"role", "user"}, {"text", t.image_token + " " + e.query}},
                    {{"role", "assistant"}, {"text", e.answer}}})},
      {"meta",
       {{"regime", to_string(e.regime)},
        {"pattern", to_string(e.pattern)},
        {"is_food", e.is_food},
        {"source_id", e.source_id}}},
  };
}

TrainingExample example_from_json(const json& row, const TemplateConfig& t) {
  try {
    TrainingExample e;
    e.image_ref = row.at("image").get<std::string>();
    const auto& turns = row.at("conversations");
    if (!turns.is_array() || turns.size() != 2) throw DataError("conversation must have exactly two turns");
    const auto user = turns.at(0).at("text").get<std::string>();
    const std::string prefix = t.image_token + " ";
    if (!text::starts_with(user, prefix)) throw DataError("user turn does not start with the image token");
    e.query = user.substr(prefix.size());
    e.answer = turns.at(1).at("text").get<std::string>();
    const auto& meta = row.at("meta");
    e.regime = regime_from_string(meta.at("regime").get<std::string>());
    e.pattern = query_pattern_from_string(meta.at("pattern").get<std::string>());
    e.is_food = meta.at("is_food").get<bool>();
    e.source_id = meta.value("source_id", "");
    return e;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed training example: ") + ex.what());
  }
}

std::size_t write_examples(const std::vector<TrainingExample>& examples, const std::filesystem::path& path,
                           const TemplateConfig& t) {
  std::vector<json> rows;
  rows.reserve(examples.size());
  for (const auto& e : examples) rows.push_back(example_to_json(e, t));
  write_jsonl(path, rows);
  return rows.size();
}

std::vector<TrainingExample> read_examples(const std::filesystem::path& path, const TemplateConfig& t) {
  std::vector<TrainingExample> out;
  for (const auto& row : read_jsonl(path)) out.push_back(example_from_json(row, t));
  return out;
}

}  // namespace recipebench::traindata
