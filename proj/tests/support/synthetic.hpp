#pragma once

// Synthetic corpora for tests. Generated text avoids the separator, repeated
// adjacent blocks and section labels, so rendering then parsing is lossless.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "recipebench/dataset.hpp"
#include "recipebench/rng.hpp"

namespace rbtest {

using recipebench::Rng;
using recipebench::dataset::CaptionRecord;
using recipebench::dataset::IngredientEntry;
using recipebench::dataset::Recipe;
using recipebench::dataset::RecipeCorpus;

inline const std::vector<std::string>& ingredient_pool() {
  static const std::vector<std::string> kPool = {
      "豚肉",   "鶏もも肉", "牛こま切れ肉", "合いびき肉", "鮭",     "さば",   "えび",     "あさり",   "木綿豆腐",
      "卵",     "玉ねぎ",   "にんじん",     "じゃがいも", "キャベツ", "白菜",   "大根",     "ほうれん草", "小松菜",
      "もやし", "しめじ",   "えのき",       "ピーマン",   "なす",   "トマト", "きゅうり", "長ねぎ",   "にんにく",
      "生姜",   "ごはん",   "うどん",       "スパゲッティ", "薄力粉", "牛乳",   "バター",   "チーズ",   "わかめ",
      "塩",     "砂糖",     "醤油",         "みりん",     "料理酒", "味噌",   "酢",       "ごま油",   "サラダ油",
      "こしょう", "片栗粉", "ケチャップ",   "マヨネーズ", "だし",
  };
  return kPool;
}

inline const std::vector<std::string>& quantity_pool() {
  static const std::vector<std::string> kPool = {"100g", "200g", "1個", "2本", "大さじ1", "小さじ2", "少々", "適量",
                                                 "1/2個", "300ml", "1枚", "1パック", ""};
  return kPool;
}

inline const std::vector<std::string>& step_pool() {
  static const std::vector<std::string> kPool = {
      "鍋に湯を沸かす",          "野菜を食べやすい大きさに切る", "フライパンに油をひいて中火で熱する",
      "肉を入れて色が変わるまで炒める", "調味料を合わせておく",       "弱火で10分ほど煮込む",
      "器に盛り付けて完成",      "ボウルに卵を割りほぐす",       "水気をよく切る",
      "全体に味がなじむまで混ぜる", "蓋をして5分蒸し焼きにする",   "オーブンを200度に予熱する",
      "表面に焼き色をつける",    "粗熱を取って冷蔵庫で冷やす",   "ごはんの上にのせる",
      "火を止めて余熱で火を通す", "塩で味をととのえる",           "ざるにあげて冷ます",
  };
  return kPool;
}

inline const std::vector<std::string>& title_pool() {
  static const std::vector<std::string> kPool = {"肉じゃが", "親子丼", "豚の生姜焼き", "鮭のムニエル", "麻婆豆腐",
                                                 "野菜炒め", "クリームシチュー", "ほうれん草のおひたし", "ナポリタン",
                                                 "だし巻き卵", "カレーライス", "ポテトサラダ"};
  return kPool;
}

template <typename T>
std::vector<T> sample_without_replacement(Rng& rng, const std::vector<T>& pool, std::size_t k) {
  std::vector<T> copy = pool;
  rng.shuffle(copy);
  copy.resize(std::min(k, copy.size()));
  return copy;
}

inline Recipe make_recipe(Rng& rng, const std::string& id, const std::vector<std::string>& category_path) {
  Recipe r;
  r.id = id;
  r.title = title_pool()[rng.uniform(title_pool().size())];
  if (rng.uniform(2) == 0) r.title += "風";
  for (const auto& name : sample_without_replacement(rng, ingredient_pool(), 1 + rng.uniform(8))) {
    r.ingredients.push_back({name, quantity_pool()[rng.uniform(quantity_pool().size())]});
  }
  r.steps = sample_without_replacement(rng, step_pool(), 1 + rng.uniform(6));
  r.image_ref = "img/" + id + ".jpg";
  r.category_path = category_path;
  return r;
}

// `per_category[c]` recipes under top-level category "c<c>", each with a
// second level "c<c>-<k>" for k in 0..2.
inline RecipeCorpus make_corpus(std::uint64_t seed, const std::vector<std::size_t>& per_category) {
  Rng rng(seed);
  RecipeCorpus corpus;
  std::size_t next_id = 0;
  for (std::size_t c = 0; c < per_category.size(); ++c) {
    for (std::size_t i = 0; i < per_category[c]; ++i) {
      const std::string top = "c" + std::to_string(c);
      const std::string id = "r" + std::to_string(100000 + next_id++);
      corpus.recipes.push_back(make_recipe(rng, id, {top, top + "-" + std::to_string(rng.uniform(3))}));
    }
  }
  // Input order should not matter to anything downstream.
  rng.shuffle(corpus.recipes);
  return corpus;
}

inline CaptionRecord make_caption(std::size_t i, std::set<std::string> supercategories) {
  CaptionRecord c;
  c.image_id = "coco" + std::to_string(1000 + i);
  for (int k = 0; k < 5; ++k) c.captions.push_back("写真" + std::to_string(i) + "の説明" + std::to_string(k));
  c.supercategories = std::move(supercategories);
  return c;
}

// 50 categories "e0".."e49"; top-level "c<k>" maps to "e<k % 50>".
inline recipebench::dataset::CategoryTaxonomy make_taxonomy(std::size_t top_levels) {
  recipebench::dataset::CategoryTaxonomy t;
  for (std::size_t i = 0; i < recipebench::dataset::kEvalCategoryCount; ++i) t.category_names.push_back("e" + std::to_string(i));
  for (std::size_t c = 0; c < top_levels; ++c) t.entries["c" + std::to_string(c)] = "e" + std::to_string(c % 50);
  return t;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("recipebench_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rbtest
