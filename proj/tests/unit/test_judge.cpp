#include <gtest/gtest.h>

#include <fstream>

#include "recipebench/error.hpp"
#include "recipebench/judge.hpp"
#include "synthetic.hpp"
#include "synthetic_pairs.hpp"

using namespace recipebench;
using namespace recipebench::judge;
using metrics::SetScope;

namespace {

SeasoningLexicon test_lexicon() {
  return SeasoningLexicon(rbtest::canonical_seasonings(), ItemNormalizer(rbtest::canonical_synonyms()));
}

// A judge response equivalent to the offline verdict.
std::string response_for(const JudgeVerdict& v) {
  json doc = {{"common", json::array()}, {"only_generated", json::array()}, {"only_truth", json::array()}};
  for (const auto& m : v.matched) doc["common"].push_back({{"generated", m.generated}, {"truth", m.truth}, {"seasoning", m.seasoning}});
  for (const auto& u : v.generated_only) doc["only_generated"].push_back({{"item", u.item}, {"seasoning", u.seasoning}});
  for (const auto& u : v.truth_only) doc["only_truth"].push_back({{"item", u.item}, {"seasoning", u.seasoning}});
  return doc.dump();
}

}  // namespace

TEST(SetPair, TrimsDropsBlanksAndCollapsesDuplicates) {
  const auto p = make_set_pair("s", {" 塩 ", "", "塩", "砂糖", "　"}, {"卵", "卵"});
  EXPECT_EQ(p.generated, (std::vector<std::string>{"塩", "砂糖"}));
  EXPECT_EQ(p.generated_duplicates, 1u);
  EXPECT_EQ(p.truth, (std::vector<std::string>{"卵"}));
  EXPECT_EQ(p.truth_duplicates, 1u);
}

TEST(Normalizer, FoldsSurfaceVariants) {
  const ItemNormalizer n(rbtest::canonical_synonyms());
  for (const auto& item : rbtest::canonical_items()) {
    for (const auto& v : item.variants) EXPECT_EQ(n.key(v), n.key(item.name)) << v;
  }
  EXPECT_NE(n.key("しお"), n.key("しょうゆ"));
  EXPECT_EQ(n.fold("Ｏｌｉｖｅ ＯＩＬ"), "oliveoil");
}

TEST(Normalizer, ConflictingSynonymsAreRejected) {
  using Synonyms = std::map<std::string, std::vector<std::string>>;
  EXPECT_THROW(ItemNormalizer(Synonyms{{"a", {"x"}}, {"b", {"x"}}}), ConfigError);
  EXPECT_THROW(ItemNormalizer(Synonyms{{" ", {"x"}}}), ConfigError);
}

TEST(Lexicon, LoadsFileAndAppliesNormalizer) {
  const auto dir = rbtest::temp_dir("lexicon");
  {
    std::ofstream out(dir / "lex.txt");
    out << "# seasonings\n塩\n\n  醤油  \n";
  }
  const auto lex = load_lexicon(dir / "lex.txt", ItemNormalizer(rbtest::canonical_synonyms()));
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_TRUE(lex.contains("しお"));
  EXPECT_TRUE(lex.contains("ショウユ"));
  EXPECT_FALSE(lex.contains("# seasonings"));
  EXPECT_THROW(load_lexicon(dir / "missing.txt"), ConfigError);
}

TEST(Lexicon, BundledDataLoads) {
  const std::filesystem::path data = RECIPEBENCH_DATA_DIR;
  const auto lex = load_lexicon(data / "seasonings.txt", load_synonyms(data / "synonyms.json"));
  EXPECT_GT(lex.size(), 30u);
  EXPECT_TRUE(lex.contains("塩"));
  EXPECT_TRUE(lex.contains("しょうゆ"));
  EXPECT_FALSE(lex.contains("じゃがいも"));
}

TEST(Offline, MatchesByNormalizedKey) {
  const auto lex = test_lexicon();
  const auto pair = make_set_pair("s", {"タマネギ", "豚肉", "塩"}, {"玉ねぎ", "しお", "にんじん"});
  const auto v = judge_offline(pair, lex.normalizer(), lex);
  ASSERT_EQ(v.matched.size(), 2u);
  EXPECT_EQ(v.matched[0], (MatchedItem{"タマネギ", "玉ねぎ", false}));
  EXPECT_EQ(v.matched[1], (MatchedItem{"塩", "しお", true}));
  EXPECT_EQ(v.generated_only, (std::vector<UnmatchedItem>{{"豚肉", false}}));
  EXPECT_EQ(v.truth_only, (std::vector<UnmatchedItem>{{"にんじん", false}}));
  EXPECT_EQ(v.source, VerdictSource::Offline);
  EXPECT_TRUE(partition_holds(v, pair));

  const auto counts = verdict_counts(v);
  ASSERT_EQ(counts.size(), 3u);
  EXPECT_EQ(counts[0].scope, SetScope::All);
  EXPECT_EQ(counts[0].tp, 2u);
  EXPECT_EQ(counts[1].scope, SetScope::NonSeasoning);
  EXPECT_EQ(counts[1].tp, 1u);
  EXPECT_EQ(counts[1].fp, 1u);
  EXPECT_EQ(counts[1].fn, 1u);
  EXPECT_EQ(counts[2].tp, 1u);
  EXPECT_EQ(counts[2].fp + counts[2].fn, 0u);
}

TEST(Offline, DuplicateKeysPairInOrder) {
  const SeasoningLexicon lex;
  const auto pair = make_set_pair("s", {"トマト", "とまと"}, {"ﾄﾏﾄ"});
  const auto v = judge_offline(pair, lex.normalizer(), lex);
  ASSERT_EQ(v.matched.size(), 1u);
  EXPECT_EQ(v.matched[0].generated, "トマト");
  EXPECT_EQ(v.generated_only[0].item, "とまと");
}

TEST(Offline, EmptySides) {
  const SeasoningLexicon lex;
  const auto v = judge_offline(make_set_pair("s", {}, {"a", "b"}), lex.normalizer(), lex);
  EXPECT_TRUE(v.matched.empty());
  EXPECT_EQ(v.truth_only.size(), 2u);
  const auto counts = verdict_counts(v);
  EXPECT_EQ(counts[0].fn, 2u);
  EXPECT_TRUE(counts[0].partition_holds());
}

TEST(Offline, SwappingSidesMirrorsCounts) {
  const auto lex = test_lexicon();
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const auto lp = rbtest::make_labelled_pair(rng, "s");
    const auto swapped = make_set_pair("s", lp.pair.truth, lp.pair.generated);
    const auto a = verdict_counts(judge_offline(lp.pair, lex.normalizer(), lex));
    const auto b = verdict_counts(judge_offline(swapped, lex.normalizer(), lex));
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(a[k].tp, b[k].tp);
      EXPECT_EQ(a[k].fp, b[k].fn);
      EXPECT_EQ(a[k].fn, b[k].fp);
    }
  }
}

TEST(Offline, AgreesWithCanonicalLabels) {
  const auto lex = test_lexicon();
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto lp = rbtest::make_labelled_pair(rng, "s" + std::to_string(i));
    const auto counts = verdict_counts(judge_offline(lp.pair, lex.normalizer(), lex));
    const auto oracle = rbtest::oracle_counts(lp);
    for (const auto& c : counts) {
      const auto& o = oracle.at(metrics::to_string(c.scope));
      EXPECT_EQ(c.tp, o.tp);
      EXPECT_EQ(c.fp, o.fp);
      EXPECT_EQ(c.fn, o.fn);
    }
  }
}

TEST(Prompt, SubstitutesListsAndSchema) {
  const auto pair = make_set_pair("s", {"塩", "{truth}"}, {});
  const auto prompt = build_judge_prompt(pair, "G:\n{generated}\nT:\n{truth}\nS: {schema}");
  EXPECT_EQ(prompt, "G:\n- 塩\n- {truth}\nT:\n(none)\nS: " + verdict_schema_text());
  EXPECT_THROW(build_judge_prompt(pair, "no placeholders"), ConfigError);
  EXPECT_THROW(build_judge_prompt(pair, "{truth} {generated}"), ConfigError);
  const auto def = build_judge_prompt(pair, default_prompt_template());
  EXPECT_NE(def.find("- 塩"), std::string::npos);
  EXPECT_NE(def.find("only_generated"), std::string::npos);
}

TEST(Prompt, BundledTemplateMatchesDefault) {
  const std::filesystem::path data = RECIPEBENCH_DATA_DIR;
  EXPECT_EQ(load_prompt_template(data / "judge_prompt.txt"), default_prompt_template());
}

TEST(Response, ExtractsJsonFromFencesAndProse) {
  EXPECT_EQ(extract_json_object(R"({"a": 1})")->at("a"), 1);
  EXPECT_EQ(extract_json_object("結果です:\n```json\n{\"a\": 2}\n```\n以上")->at("a"), 2);
  EXPECT_EQ(extract_json_object(R"(prefix {"a": "}{", "b": {"c": 3}} suffix)")->at("b").at("c"), 3);
  EXPECT_FALSE(extract_json_object("no json here"));
  EXPECT_FALSE(extract_json_object("{broken"));
}

TEST(Response, ParsesExactVerdict) {
  const auto lex = test_lexicon();
  const auto pair = make_set_pair("s", {"タマネギ", "豚肉", "塩"}, {"玉ねぎ", "しお", "にんじん"});
  const auto offline = judge_offline(pair, lex.normalizer(), lex);
  const auto v = parse_verdict("```json\n" + response_for(offline) + "\n```", pair, lex);
  EXPECT_EQ(v.matched, offline.matched);
  EXPECT_EQ(v.generated_only, offline.generated_only);
  EXPECT_EQ(v.truth_only, offline.truth_only);
  EXPECT_FALSE(v.repaired);
  EXPECT_EQ(v.source, VerdictSource::Remote);
}

TEST(Response, RepairsOmissionsAndMissingFlags) {
  const auto lex = test_lexicon();
  const auto pair = make_set_pair("s", {"玉ねぎ", "塩"}, {"タマネギ", "醤油"});
  const auto v = parse_verdict(R"({"common": [{"generated": "玉ねぎ", "truth": "タマネギ"}]})", pair, lex);
  EXPECT_TRUE(v.repaired);
  EXPECT_EQ(v.generated_only, (std::vector<UnmatchedItem>{{"塩", true}}));
  EXPECT_EQ(v.truth_only, (std::vector<UnmatchedItem>{{"醤油", true}}));
  EXPECT_EQ(v.repair_notes.size(), 3u);
  EXPECT_TRUE(partition_holds(v, pair));
}

TEST(Response, FuzzyMapsNearMissesOnce) {
  const SeasoningLexicon lex;
  const auto pair = make_set_pair("s", {"豚バラ肉 (薄切り)"}, {"豚バラ肉"});
  const auto v = parse_verdict(R"({"common": [{"generated": "豚バラ肉", "truth": "豚バラ肉", "seasoning": false}]})", pair, lex);
  ASSERT_EQ(v.matched.size(), 1u);
  EXPECT_EQ(v.matched[0].generated, "豚バラ肉 (薄切り)");
  EXPECT_TRUE(v.repaired);
}

TEST(Response, FabricatedItemsAreRejected) {
  const SeasoningLexicon lex;
  const auto pair = make_set_pair("s", {"卵"}, {"牛乳"});
  try {
    parse_verdict(R"({"common": [{"generated": "キャビア", "truth": "牛乳", "seasoning": false}]})", pair, lex);
    FAIL() << "expected VerdictError";
  } catch (const VerdictError& e) {
    EXPECT_NE(e.raw_response.find("キャビア"), std::string::npos);
  }
  EXPECT_THROW(parse_verdict("sorry, no json", pair, lex), VerdictError);
  EXPECT_THROW(parse_verdict(R"({"common": "x"})", pair, lex), VerdictError);
  // The same item claimed twice cannot satisfy the partition.
  const auto two = make_set_pair("s", {"卵"}, {"牛乳", "卵"});
  EXPECT_THROW(parse_verdict(R"({"common": [{"generated": "卵", "truth": "卵", "seasoning": false}],
                                 "only_generated": [{"item": "卵", "seasoning": false}]})",
                             two, lex),
               VerdictError);
}

TEST(Outcomes, JsonRoundTrip) {
  const auto lex = test_lexicon();
  const auto pair = make_set_pair("s1", {"玉ねぎ", "塩"}, {"タマネギ"});
  auto v = parse_verdict(R"({"common": [{"generated": "玉ねぎ", "truth": "タマネギ"}]})", pair, lex);
  EXPECT_EQ(verdict_from_json(verdict_to_json(v)), v);

  const auto dir = rbtest::temp_dir("outcomes");
  std::vector<JudgeOutcome> outcomes = {{"s1", v, "", "", 2}, {"s2", std::nullopt, "bad json", "raw text", 5}};
  write_outcomes(dir / "v.jsonl", outcomes);
  const auto back = load_outcomes(dir / "v.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[0].ok());
  EXPECT_EQ(*back[0].verdict, v);
  EXPECT_EQ(back[0].attempts, 2);
  EXPECT_FALSE(back[1].ok());
  EXPECT_EQ(back[1].error, "bad json");
  EXPECT_EQ(back[1].raw_response, "raw text");
}

TEST(Audit, SamplesPerCategoryDeterministically) {
  const auto assigned = dataset::assign_eval_categories(rbtest::make_corpus(3, {10, 10, 1}), rbtest::make_taxonomy(3));
  const auto evalset = dataset::sample_balanced(assigned.corpus, 6, 1);
  const SeasoningLexicon lex;
  std::vector<JudgeVerdict> verdicts;
  for (const auto& r : evalset.samples) {
    verdicts.push_back(judge_offline(make_set_pair(r.id, {"a", "b"}, {"a", "c"}), lex.normalizer(), lex));
  }
  const auto subset = sample_audit(verdicts, evalset, 2, 7);
  ASSERT_EQ(subset.entries.size(), 5u);  // 2 + 2 + 1
  std::map<std::string, int> per;
  for (const auto& e : subset.entries) ++per[e.category];
  EXPECT_EQ(per["e2"], 1);
  const auto again = sample_audit(verdicts, evalset, 2, 7);
  for (std::size_t i = 0; i < subset.entries.size(); ++i) {
    EXPECT_EQ(subset.entries[i].verdict.sample_id, again.entries[i].verdict.sample_id);
  }
  const auto csv = audit_sheet_csv(subset);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sample_id,category,relation,generated_item,truth_item,seasoning,correct");
  // One row per judged item: a/a matched, b, c.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 3);

  auto stray = verdicts;
  stray.push_back(verdicts.front());
  stray.back().sample_id = "unknown";
  EXPECT_THROW(sample_audit(stray, evalset, 2, 7), DataError);
}
