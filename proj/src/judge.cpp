#include "recipebench/judge.hpp"

#include <algorithm>
#include <sstream>

#include "recipebench/error.hpp"
#include "recipebench/rng.hpp"
#include "recipebench/text.hpp"

namespace recipebench::judge {

namespace {

std::vector<std::string> clean_items(const std::vector<std::string>& raw, std::size_t& duplicates) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : raw) {
    std::string t = text::trim_copy(item);
    if (t.empty()) continue;
    if (!seen.insert(t).second) {
      ++duplicates;
      continue;
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

IngredientSetPair make_set_pair(std::string sample_id, const std::vector<std::string>& generated,
                                const std::vector<std::string>& truth) {
  IngredientSetPair pair;
  pair.sample_id = std::move(sample_id);
  pair.generated = clean_items(generated, pair.generated_duplicates);
  pair.truth = clean_items(truth, pair.truth_duplicates);
  return pair;
}

// ---- normalization ---------------------------------------------------------

ItemNormalizer::ItemNormalizer(const std::map<std::string, std::vector<std::string>>& synonyms) {
  for (const auto& [canonical, variants] : synonyms) {
    const std::string target = fold(canonical);
    if (target.empty()) throw ConfigError("synonym table has an empty canonical form");
    variant_to_canonical_[target] = target;
    for (const auto& v : variants) {
      const std::string k = fold(v);
      if (k.empty()) continue;
      auto [it, inserted] = variant_to_canonical_.emplace(k, target);
      if (!inserted && it->second != target) {
        throw ConfigError("synonym '" + v + "' maps to both '" + it->second + "' and '" + target + "'");
      }
    }
  }
}

std::string ItemNormalizer::fold(std::string_view item) const {
  return text::katakana_to_hiragana(text::strip_all_space(text::case_fold(text::nfkc(item))));
}

std::string ItemNormalizer::key(std::string_view item) const {
  std::string k = fold(item);
  auto it = variant_to_canonical_.find(k);
  return it == variant_to_canonical_.end() ? k : it->second;
}

ItemNormalizer load_synonyms(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("synonym file not found: " + path.string());
  try {
    const json doc = json::parse(read_text_file(path));
    return ItemNormalizer(doc.get<std::map<std::string, std::vector<std::string>>>());
  } catch (const json::exception& e) {
    throw ConfigError("malformed synonym file " + path.string() + ": " + e.what());
  }
}

SeasoningLexicon::SeasoningLexicon(const std::vector<std::string>& words, ItemNormalizer normalizer)
    : normalizer_(std::move(normalizer)) {
  for (const auto& w : words) {
    std::string k = normalizer_.key(w);
    if (!k.empty()) keys_.insert(std::move(k));
  }
}

bool SeasoningLexicon::contains(std::string_view item) const { return keys_.count(normalizer_.key(item)) > 0; }

SeasoningLexicon load_lexicon(const std::filesystem::path& path, ItemNormalizer normalizer) {
  if (!std::filesystem::exists(path)) throw ConfigError("seasoning lexicon not found: " + path.string());
  std::vector<std::string> words;
  for (const auto& line : read_lines(path)) {
    const auto t = text::trim(line.text);
    if (t.empty() || t.front() == '#') continue;
    words.emplace_back(t);
  }
  return SeasoningLexicon(words, std::move(normalizer));
}

// ---- verdicts --------------------------------------------------------------

const char* to_string(VerdictSource source) {
  switch (source) {
    case VerdictSource::Remote: return "remote";
    case VerdictSource::Offline: return "offline";
    case VerdictSource::Cache: return "cache";
  }
  return "remote";
}

VerdictSource verdict_source_from_string(const std::string& name) {
  for (auto s : {VerdictSource::Remote, VerdictSource::Offline, VerdictSource::Cache}) {
    if (name == to_string(s)) return s;
  }
  throw DataError("unknown verdict source: " + name);
}

bool partition_holds(const JudgeVerdict& verdict, const IngredientSetPair& pair) {
  if (verdict.matched.size() + verdict.generated_only.size() != pair.generated.size()) return false;
  if (verdict.matched.size() + verdict.truth_only.size() != pair.truth.size()) return false;
  std::multiset<std::string> s1(pair.generated.begin(), pair.generated.end());
  std::multiset<std::string> s2(pair.truth.begin(), pair.truth.end());
  const auto take = [](std::multiset<std::string>& pool, const std::string& item) {
    auto it = pool.find(item);
    if (it == pool.end()) return false;
    pool.erase(it);
    return true;
  };
  for (const auto& m : verdict.matched) {
    if (!take(s1, m.generated) || !take(s2, m.truth)) return false;
  }
  for (const auto& u : verdict.generated_only) {
    if (!take(s1, u.item)) return false;
  }
  for (const auto& u : verdict.truth_only) {
    if (!take(s2, u.item)) return false;
  }
  return s1.empty() && s2.empty();
}

std::vector<metrics::SetCounts> verdict_counts(const JudgeVerdict& verdict) {
  using metrics::SetScope;
  std::map<SetScope, metrics::SetCounts> by_scope;
  for (auto s : metrics::kAllScopes) by_scope[s].scope = s;
  const auto bump = [&](bool seasoning, std::uint64_t metrics::SetCounts::*field, bool in_s1, bool in_s2) {
    for (auto s : {SetScope::All, seasoning ? SetScope::Seasoning : SetScope::NonSeasoning}) {
      auto& c = by_scope[s];
      ++(c.*field);
      if (in_s1) ++c.generated_size;
      if (in_s2) ++c.truth_size;
    }
  };
  for (const auto& m : verdict.matched) bump(m.seasoning, &metrics::SetCounts::tp, true, true);
  for (const auto& u : verdict.generated_only) bump(u.seasoning, &metrics::SetCounts::fp, true, false);
  for (const auto& u : verdict.truth_only) bump(u.seasoning, &metrics::SetCounts::fn, false, true);
  std::vector<metrics::SetCounts> out;
  for (auto s : metrics::kAllScopes) out.push_back(by_scope[s]);
  return out;
}

JudgeVerdict judge_offline(const IngredientSetPair& pair, const ItemNormalizer& normalizer,
                           const SeasoningLexicon& lexicon) {
  JudgeVerdict v;
  v.sample_id = pair.sample_id;
  v.source = VerdictSource::Offline;
  std::vector<std::string> truth_keys;
  truth_keys.reserve(pair.truth.size());
  for (const auto& t : pair.truth) truth_keys.push_back(normalizer.key(t));
  std::vector<bool> used(pair.truth.size(), false);
  for (const auto& g : pair.generated) {
    const std::string k = normalizer.key(g);
    bool found = false;
    for (std::size_t j = 0; j < pair.truth.size(); ++j) {
      if (!used[j] && truth_keys[j] == k) {
        used[j] = true;
        v.matched.push_back({g, pair.truth[j], lexicon.contains(g) || lexicon.contains(pair.truth[j])});
        found = true;
        break;
      }
    }
    if (!found) v.generated_only.push_back({g, lexicon.contains(g)});
  }
  for (std::size_t j = 0; j < pair.truth.size(); ++j) {
    if (!used[j]) v.truth_only.push_back({pair.truth[j], lexicon.contains(pair.truth[j])});
  }
  return v;
}

// ---- prompt ----------------------------------------------------------------

std::string default_prompt_template() {
  return "あなたは料理レシピの材料リストを比較する審査員です。\n"
         "次の2つの材料リストを比較し、両方に含まれる材料と、片方にしか含まれない材料に分類してください。\n"
         "漢字・ひらがな・カタカナの表記の違いや、同じ食材の別名は同じ材料として扱ってください。\n"
         "分量は無視してください。各材料が調味料かどうかも判定してください。\n"
         "材料名はリストに書かれたとおりに、そのまま出力してください。\n"
         "\n"
         "生成された材料リスト:\n"
         "{generated}\n"
         "\n"
         "正解の材料リスト:\n"
         "{truth}\n"
         "\n"
         "次の形式のJSONのみを出力してください。\n"
         "{schema}\n";
}

std::string load_prompt_template(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("judge prompt not found: " + path.string());
  std::string t = read_text_file(path);
  for (const char* ph : {"{generated}", "{truth}"}) {
    if (t.find(ph) == std::string::npos) {
      throw ConfigError("judge prompt " + path.string() + " lacks placeholder " + ph);
    }
  }
  return t;
}

std::string verdict_schema_text() {
  return R"({"common": [{"generated": "<生成リストの材料>", "truth": "<正解リストの材料>", "seasoning": true}], )"
         R"("only_generated": [{"item": "<生成リストの材料>", "seasoning": false}], )"
         R"("only_truth": [{"item": "<正解リストの材料>", "seasoning": false}]})";
}

namespace {

std::string render_items(const std::vector<std::string>& items) {
  if (items.empty()) return kEmptyListMarker;
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += "- ";
    out += items[i];
  }
  return out;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

std::string build_judge_prompt(const IngredientSetPair& pair, const std::string& prompt_template) {
  // Substitute schema first; item text may itself contain braces.
  std::string out = prompt_template;
  replace_all(out, "{schema}", verdict_schema_text());
  const std::string gen = render_items(pair.generated);
  const std::string tru = render_items(pair.truth);
  const auto g = out.find("{generated}");
  if (g == std::string::npos) throw ConfigError("judge prompt lacks {generated}");
  out.replace(g, 11, gen);
  const auto t = out.find("{truth}", g + gen.size());
  if (t == std::string::npos) throw ConfigError("judge prompt lacks {truth} after {generated}");
  out.replace(t, 7, tru);
  return out;
}

// ---- response parsing ------------------------------------------------------

std::optional<json> extract_json_object(std::string_view response) {
  const auto try_parse = [](std::string_view s) -> std::optional<json> {
    // Scan balanced braces from the first '{', honouring string literals.
    for (std::size_t start = s.find('{'); start != std::string_view::npos; start = s.find('{', start + 1)) {
      int depth = 0;
      bool in_string = false;
      bool escaped = false;
      for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
          if (escaped) escaped = false;
          else if (c == '\\') escaped = true;
          else if (c == '"') in_string = false;
          continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) {
          json j = json::parse(s.substr(start, i - start + 1), nullptr, false);
          if (!j.is_discarded() && j.is_object()) return j;
          break;
        }
      }
    }
    return std::nullopt;
  };
  const auto fence = response.find("```");
  if (fence != std::string_view::npos) {
    auto body_start = response.find('\n', fence);
    if (body_start != std::string_view::npos) {
      ++body_start;
      const auto end = response.find("```", body_start);
      auto body = response.substr(body_start, end == std::string_view::npos ? std::string_view::npos : end - body_start);
      if (auto j = try_parse(body)) return j;
    }
  }
  return try_parse(response);
}

namespace {

class ItemResolver {
 public:
  ItemResolver(const std::vector<std::string>& items, const ItemNormalizer& normalizer)
      : items_(items), normalizer_(normalizer), used_(items.size(), false) {
    for (const auto& it : items) {
      exact_.push_back(text::trim_copy(text::nfkc(it)));
      folded_.push_back(normalizer.fold(it));
    }
  }

  std::optional<std::size_t> exact(const std::string& name) {
    const std::string k = text::trim_copy(text::nfkc(name));
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (!used_[i] && exact_[i] == k) return take(i);
    }
    return std::nullopt;
  }

  // Unique unused item whose folded form equals, contains or is contained in
  // the folded reference.
  std::optional<std::size_t> fuzzy(const std::string& name) {
    const std::string k = normalizer_.fold(name);
    if (k.empty()) return std::nullopt;
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (used_[i] || folded_[i].empty()) continue;
      if (folded_[i].find(k) != std::string::npos || k.find(folded_[i]) != std::string::npos) {
        if (hit) return std::nullopt;
        hit = i;
      }
    }
    if (hit) take(*hit);
    return hit;
  }

  const std::string& item(std::size_t i) const { return items_[i]; }
  std::vector<std::size_t> unused() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < used_.size(); ++i) {
      if (!used_[i]) out.push_back(i);
    }
    return out;
  }

 private:
  std::size_t take(std::size_t i) {
    used_[i] = true;
    return i;
  }

  const std::vector<std::string>& items_;
  const ItemNormalizer& normalizer_;
  std::vector<std::string> exact_;
  std::vector<std::string> folded_;
  std::vector<bool> used_;
};

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

std::optional<bool> bool_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_string()) {
    const auto s = it->get<std::string>();
    if (s == "true") return true;
    if (s == "false") return false;
  }
  return std::nullopt;
}

const json& array_field(const json& obj, const char* key, const std::string& raw) {
  static const json empty = json::array();
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return empty;
  if (!it->is_array()) throw VerdictError(std::string("verdict field '") + key + "' is not an array", raw);
  return *it;
}

}  // namespace

JudgeVerdict parse_verdict(std::string_view response, const IngredientSetPair& pair, const SeasoningLexicon& lexicon,
                           VerdictSource source) {
  const std::string raw(response);
  auto doc = extract_json_object(response);
  if (!doc) throw VerdictError("judge response contains no JSON object", raw);

  JudgeVerdict v;
  v.sample_id = pair.sample_id;
  v.source = source;
  v.raw_response = raw;

  const ItemNormalizer& normalizer = lexicon.normalizer();
  ItemResolver s1(pair.generated, normalizer);
  ItemResolver s2(pair.truth, normalizer);

  const auto seasoning_of = [&](const json& entry, const std::string& fallback_item) {
    if (auto b = bool_field(entry, "seasoning")) return *b;
    v.repaired = true;
    v.repair_notes.push_back("seasoning flag missing for '" + fallback_item + "'; taken from lexicon");
    return lexicon.contains(fallback_item);
  };

  struct Pending {
    enum Kind { Matched, GenOnly, TruthOnly } kind;
    std::string generated;
    std::string truth;
    std::optional<std::size_t> g;
    std::optional<std::size_t> t;
    json entry;
  };
  std::vector<Pending> pending;

  for (const auto& e : array_field(*doc, "common", raw)) {
    if (!e.is_object()) throw VerdictError("common entry is not an object", raw);
    Pending p{Pending::Matched, string_field(e, "generated"), string_field(e, "truth"), {}, {}, e};
    p.g = s1.exact(p.generated);
    p.t = s2.exact(p.truth);
    pending.push_back(std::move(p));
  }
  for (const auto& e : array_field(*doc, "only_generated", raw)) {
    if (!e.is_object()) throw VerdictError("only_generated entry is not an object", raw);
    Pending p{Pending::GenOnly, string_field(e, "item"), {}, {}, {}, e};
    p.g = s1.exact(p.generated);
    pending.push_back(std::move(p));
  }
  for (const auto& e : array_field(*doc, "only_truth", raw)) {
    if (!e.is_object()) throw VerdictError("only_truth entry is not an object", raw);
    Pending p{Pending::TruthOnly, {}, string_field(e, "item"), {}, {}, e};
    p.t = s2.exact(p.truth);
    pending.push_back(std::move(p));
  }

  // Single repair pass over references that did not resolve exactly.
  for (auto& p : pending) {
    if (p.kind != Pending::TruthOnly && !p.g) {
      p.g = s1.fuzzy(p.generated);
      if (!p.g) throw VerdictError("item '" + p.generated + "' does not map to a generated ingredient", raw);
      v.repaired = true;
      v.repair_notes.push_back("mapped '" + p.generated + "' to '" + s1.item(*p.g) + "'");
    }
    if (p.kind != Pending::GenOnly && !p.t) {
      p.t = s2.fuzzy(p.truth);
      if (!p.t) throw VerdictError("item '" + p.truth + "' does not map to a ground-truth ingredient", raw);
      v.repaired = true;
      v.repair_notes.push_back("mapped '" + p.truth + "' to '" + s2.item(*p.t) + "'");
    }
  }

  for (const auto& p : pending) {
    switch (p.kind) {
      case Pending::Matched:
        v.matched.push_back({s1.item(*p.g), s2.item(*p.t), seasoning_of(p.entry, s2.item(*p.t))});
        break;
      case Pending::GenOnly:
        v.generated_only.push_back({s1.item(*p.g), seasoning_of(p.entry, s1.item(*p.g))});
        break;
      case Pending::TruthOnly:
        v.truth_only.push_back({s2.item(*p.t), seasoning_of(p.entry, s2.item(*p.t))});
        break;
    }
  }
  for (auto i : s1.unused()) {
    v.generated_only.push_back({s1.item(i), lexicon.contains(s1.item(i))});
    v.repaired = true;
    v.repair_notes.push_back("generated item '" + s1.item(i) + "' omitted by judge; placed in only_generated");
  }
  for (auto i : s2.unused()) {
    v.truth_only.push_back({s2.item(i), lexicon.contains(s2.item(i))});
    v.repaired = true;
    v.repair_notes.push_back("ground-truth item '" + s2.item(i) + "' omitted by judge; placed in only_truth");
  }

  if (!partition_holds(v, pair)) throw VerdictError("verdict violates the partition identities", raw);
  return v;
}

// ---- outcomes --------------------------------------------------------------

json verdict_to_json(const JudgeVerdict& v) {
  json matched = json::array();
  for (const auto& m : v.matched) matched.push_back({{"generated", m.generated}, {"truth", m.truth}, {"seasoning", m.seasoning}});
  const auto unmatched = [](const std::vector<UnmatchedItem>& items) {
    json arr = json::array();
    for (const auto& u : items) arr.push_back({{"item", u.item}, {"seasoning", u.seasoning}});
    return arr;
  };
  return {{"sample_id", v.sample_id},
          {"source", to_string(v.source)},
          {"matched", std::move(matched)},
          {"generated_only", unmatched(v.generated_only)},
          {"truth_only", unmatched(v.truth_only)},
          {"repaired", v.repaired},
          {"repair_notes", v.repair_notes},
          {"raw_response", v.raw_response}};
}

JudgeVerdict verdict_from_json(const json& row) {
  try {
    JudgeVerdict v;
    v.sample_id = row.at("sample_id").get<std::string>();
    v.source = verdict_source_from_string(row.at("source").get<std::string>());
    for (const auto& m : row.at("matched")) {
      v.matched.push_back({m.at("generated").get<std::string>(), m.at("truth").get<std::string>(), m.at("seasoning").get<bool>()});
    }
    for (const auto& u : row.at("generated_only")) v.generated_only.push_back({u.at("item").get<std::string>(), u.at("seasoning").get<bool>()});
    for (const auto& u : row.at("truth_only")) v.truth_only.push_back({u.at("item").get<std::string>(), u.at("seasoning").get<bool>()});
    v.repaired = row.value("repaired", false);
    v.repair_notes = row.value("repair_notes", std::vector<std::string>{});
    v.raw_response = row.value("raw_response", std::string{});
    return v;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed verdict record: ") + e.what());
  }
}

json outcome_to_json(const JudgeOutcome& o) {
  if (o.verdict) {
    json row = verdict_to_json(*o.verdict);
    row["status"] = "ok";
    row["attempts"] = o.attempts;
    return row;
  }
  return {{"sample_id", o.sample_id},
          {"status", "excluded"},
          {"error", o.error},
          {"raw_response", o.raw_response},
          {"attempts", o.attempts}};
}

JudgeOutcome outcome_from_json(const json& row) {
  JudgeOutcome o;
  try {
    o.sample_id = row.at("sample_id").get<std::string>();
    o.attempts = row.value("attempts", 0);
    if (row.value("status", std::string("ok")) == "excluded") {
      o.error = row.value("error", std::string{});
      o.raw_response = row.value("raw_response", std::string{});
      return o;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed judge outcome: ") + e.what());
  }
  o.verdict = verdict_from_json(row);
  return o;
}

void write_outcomes(const std::filesystem::path& path, const std::vector<JudgeOutcome>& outcomes) {
  std::vector<json> rows;
  rows.reserve(outcomes.size());
  for (const auto& o : outcomes) rows.push_back(outcome_to_json(o));
  write_jsonl(path, rows);
}

std::vector<JudgeOutcome> load_outcomes(const std::filesystem::path& path) {
  std::vector<JudgeOutcome> out;
  for (const auto& row : read_jsonl(path)) out.push_back(outcome_from_json(row));
  return out;
}

// ---- audit -----------------------------------------------------------------

AuditSubset sample_audit(const std::vector<JudgeVerdict>& verdicts, const dataset::EvalSet& evalset,
                         std::size_t per_category, std::uint64_t seed) {
  std::map<std::string, std::vector<const JudgeVerdict*>> by_category;
  for (const auto& v : verdicts) {
    const auto* recipe = evalset.find(v.sample_id);
    if (!recipe || !recipe->eval_category) throw DataError("verdict for unknown eval sample: " + v.sample_id);
    by_category[*recipe->eval_category].push_back(&v);
  }
  AuditSubset subset;
  subset.per_category = per_category;
  for (auto& [category, group] : by_category) {
    std::sort(group.begin(), group.end(), [](const auto* a, const auto* b) { return a->sample_id < b->sample_id; });
    Rng rng(derive_seed(seed, "audit/" + category));
    rng.shuffle(group);
    group.resize(std::min(per_category, group.size()));
    std::sort(group.begin(), group.end(), [](const auto* a, const auto* b) { return a->sample_id < b->sample_id; });
    for (const auto* v : group) subset.entries.push_back({category, *v});
  }
  return subset;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string audit_sheet_csv(const AuditSubset& subset) {
  std::ostringstream os;
  os << "sample_id,category,relation,generated_item,truth_item,seasoning,correct\n";
  const auto row = [&](const AuditEntry& e, const char* relation, const std::string& g, const std::string& t, bool s) {
    os << csv_field(e.verdict.sample_id) << ',' << csv_field(e.category) << ',' << relation << ',' << csv_field(g) << ','
       << csv_field(t) << ',' << (s ? "true" : "false") << ",\n";
  };
  for (const auto& e : subset.entries) {
    for (const auto& m : e.verdict.matched) row(e, "common", m.generated, m.truth, m.seasoning);
    for (const auto& u : e.verdict.generated_only) row(e, "only_generated", u.item, "", u.seasoning);
    for (const auto& u : e.verdict.truth_only) row(e, "only_truth", "", u.item, u.seasoning);
  }
  return os.str();
}

}  // namespace recipebench::judge
