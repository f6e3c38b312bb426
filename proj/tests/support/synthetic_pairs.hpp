#pragma once

// Ingredient pairs written with surface variants of known canonical items.
// The generator remembers which canonical item each string came from, so
// expected set counts never go through the normalizer under test.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "recipebench/judge.hpp"
#include "recipebench/rng.hpp"

namespace rbtest {

struct CanonicalItem {
  std::string name;
  bool seasoning = false;
  std::vector<std::string> variants;
};

inline const std::vector<CanonicalItem>& canonical_items() {
  static const std::vector<CanonicalItem> kItems = {
      {"じゃがいも", false, {"じゃがいも", "ジャガイモ", "じゃが いも", "馬鈴薯"}},
      {"たまねぎ", false, {"たまねぎ", "タマネギ", "玉ねぎ", "玉葱"}},
      {"にんじん", false, {"にんじん", "ニンジン", "人参", "ﾆﾝｼﾞﾝ"}},
      {"ぶたにく", false, {"豚肉", "ぶたにく", "ブタニク", "豚 肉"}},
      {"キャベツ", false, {"キャベツ", "きゃべつ", "ｷｬﾍﾞﾂ"}},
      {"トマト", false, {"トマト", "とまと", "ﾄﾏﾄ", "ト マ ト"}},
      {"ごはん", false, {"ごはん", "ご飯", "ゴハン", "白米"}},
      {"卵", false, {"卵", "たまご", "タマゴ", "玉子"}},
      {"milk", false, {"milk", "MILK", "ｍｉｌｋ", "Milk"}},
      {"鶏もも肉", false, {"鶏もも肉", "鶏モモ肉", "鶏 もも肉"}},
      {"しめじ", false, {"しめじ", "シメジ", "ｼﾒｼﾞ"}},
      {"バター", false, {"バター", "ばたー", "ﾊﾞﾀｰ"}},
      {"olive oil", true, {"olive oil", "Olive Oil", "ＯＬＩＶＥ　ＯＩＬ", "OliveOil"}},
      {"しょうゆ", true, {"しょうゆ", "ショウユ", "醤油"}},
      {"さとう", true, {"砂糖", "さとう", "サトウ"}},
      {"しお", true, {"塩", "しお", "シオ"}},
      {"こしょう", true, {"こしょう", "コショウ", "胡椒"}},
      {"みりん", true, {"みりん", "ミリン", "味醂"}},
      {"ごまあぶら", true, {"ごま油", "ゴマ油", "胡麻油"}},
      {"料理酒", true, {"料理酒", "料理 酒", "料理　酒"}},
  };
  return kItems;
}

inline std::map<std::string, std::vector<std::string>> canonical_synonyms() {
  return {{"じゃがいも", {"馬鈴薯"}}, {"たまねぎ", {"玉ねぎ", "玉葱"}}, {"にんじん", {"人参"}},
          {"ぶたにく", {"豚肉"}},     {"ごはん", {"ご飯", "白米"}},     {"卵", {"たまご", "玉子"}},
          {"しょうゆ", {"醤油"}},     {"さとう", {"砂糖"}},             {"しお", {"塩"}},
          {"こしょう", {"胡椒"}},     {"みりん", {"味醂"}},             {"ごまあぶら", {"ごま油", "胡麻油"}}};
}

inline std::vector<std::string> canonical_seasonings() {
  std::vector<std::string> out;
  for (const auto& c : canonical_items()) {
    if (c.seasoning) out.push_back(c.name);
  }
  return out;
}

struct LabelledPair {
  recipebench::judge::IngredientSetPair pair;
  std::vector<std::size_t> generated_ids;  // canonical index per generated item
  std::vector<std::size_t> truth_ids;
};

inline LabelledPair make_labelled_pair(recipebench::Rng& rng, const std::string& id) {
  const auto& items = canonical_items();
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t n_truth = rng.uniform(9);
  const std::size_t n_gen = rng.uniform(9);
  const std::size_t overlap = std::min<std::size_t>({n_truth, n_gen, rng.uniform(9)});
  LabelledPair out;
  // order[0, overlap) shared, then truth-only, then generated-only.
  for (std::size_t i = 0; i < n_truth; ++i) out.truth_ids.push_back(order[i]);
  for (std::size_t i = 0; i < overlap; ++i) out.generated_ids.push_back(order[i]);
  for (std::size_t i = 0; i < n_gen - overlap; ++i) out.generated_ids.push_back(order[n_truth + i]);
  rng.shuffle(out.generated_ids);
  auto render = [&](std::size_t c) {
    const auto& v = items[c].variants;
    std::string s = v[rng.uniform(v.size())];
    if (rng.uniform(5) == 0) s = "  " + s + " ";
    return s;
  };
  std::vector<std::string> gen, truth;
  for (auto c : out.generated_ids) gen.push_back(render(c));
  for (auto c : out.truth_ids) truth.push_back(render(c));
  out.pair = recipebench::judge::make_set_pair(id, gen, truth);
  return out;
}

struct OracleCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

// All / non-seasoning / seasoning, from canonical labels only.
inline std::map<std::string, OracleCounts> oracle_counts(const LabelledPair& p) {
  const auto& items = canonical_items();
  std::set<std::size_t> a(p.generated_ids.begin(), p.generated_ids.end());
  std::set<std::size_t> b(p.truth_ids.begin(), p.truth_ids.end());
  std::map<std::string, OracleCounts> out;
  for (const char* scope : {"all", "non_seasoning", "seasoning"}) out[scope];
  auto bump = [&](std::size_t c, std::uint64_t OracleCounts::*field) {
    ++(out["all"].*field);
    ++(out[items[c].seasoning ? "seasoning" : "non_seasoning"].*field);
  };
  for (auto c : a) bump(c, b.count(c) ? &OracleCounts::tp : &OracleCounts::fp);
  for (auto c : b) {
    if (!a.count(c)) bump(c, &OracleCounts::fn);
  }
  return out;
}

}  // namespace rbtest
