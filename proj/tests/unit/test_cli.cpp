#include <gtest/gtest.h>

#include "recipebench/cli.hpp"
#include "recipebench/error.hpp"
#include "recipebench/jsonl.hpp"
#include "recipebench/traindata.hpp"
#include "synthetic.hpp"

using namespace recipebench;
using namespace recipebench::cli;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "recipebench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// A small workspace: 4 top-level categories of 20 recipes, 8 non-food
// caption records and 2 food ones, a taxonomy and a lexicon.
fs::path make_workspace(const std::string& name) {
  const auto dir = rbtest::temp_dir(name);
  const auto corpus = rbtest::make_corpus(21, {20, 20, 20, 20});
  dataset::write_recipes(dir / "recipes.jsonl", corpus.recipes);
  std::vector<dataset::CaptionRecord> captions;
  for (std::size_t i = 0; i < 10; ++i) captions.push_back(rbtest::make_caption(i, i < 2 ? std::set<std::string>{"food"} : std::set<std::string>{"animal"}));
  dataset::write_captions(dir / "captions.jsonl", captions);
  const auto t = rbtest::make_taxonomy(4);
  write_text_file(dir / "taxonomy.json", json{{"categories", t.category_names}, {"mapping", t.entries}}.dump());
  write_text_file(dir / "seasonings.txt", "塩\n砂糖\n醤油\nみりん\n料理酒\n味噌\n酢\nごま油\nサラダ油\nこしょう\n");
  json config = {{"paths",
                  {{"recipes", "recipes.jsonl"},
                   {"captions", "captions.jsonl"},
                   {"taxonomy", "taxonomy.json"},
                   {"lexicon", "seasonings.txt"},
                   {"output_dir", "out"}}},
                 {"seeds", {{"split", 1}, {"sample", 2}, {"traindata", 3}, {"audit", 4}}},
                 {"dataset", {{"test_fraction", 0.25}, {"per_category", 4}}},
                 {"model_label", "cli-test"}};
  write_text_file(dir / "config.json", config.dump(2));
  return dir;
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"prepare", "--no-such-flag"}), 2);
  EXPECT_EQ(run({"prepare"}), 2);  // no --config
  EXPECT_EQ(run({"--config", "/nonexistent/config.json", "prepare"}), 2);
  EXPECT_EQ(run({"--judge-mode", "sometimes", "prepare"}), 2);
}

TEST(Cli, JudgeModeNames) {
  EXPECT_EQ(judge_mode_from_string("offline"), JudgeMode::Offline);
  EXPECT_EQ(judge_mode_from_string("remote"), JudgeMode::Remote);
  EXPECT_THROW(judge_mode_from_string("manual"), ConfigError);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_THROW(run_config_from_json(json{{"pathz", json::object()}}, "."), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"paths", {{"recipe", "x"}}}}, "."), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"dataset", {{"test_fraction", 1.5}}}}, "."), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"tokenizer", "nope"}}, "."), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"regimes", {"R", "Q"}}}, "."), ConfigError);
}

TEST(Config, BundledExampleLoadsAndRoundTrips) {
  const auto c = load_run_config(fs::path(RECIPEBENCH_DATA_DIR) / "config.example.json");
  EXPECT_EQ(c.per_category, 100u);
  EXPECT_EQ(c.judge.model, "gpt-4o-2024-05-13");
  EXPECT_EQ(c.resolve("taxonomy.json"), fs::path(RECIPEBENCH_DATA_DIR) / "taxonomy.json");
  const auto again = run_config_from_json(run_config_to_json(c), c.base_dir);
  EXPECT_EQ(config_hash(again), config_hash(c));
}

TEST(Config, HashIgnoresCacheLocationOnly) {
  auto a = run_config_from_json(json::object(), "/a");
  auto b = run_config_from_json(json::object(), "/b");
  b.judge.cache_dir = "/elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seeds.split = 99;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Cli, FullPipelineOnSyntheticWorkspace) {
  const auto dir = make_workspace("cli_pipeline");
  const auto cfg = (dir / "config.json").string();
  ASSERT_EQ(run({"--config", cfg, "prepare"}), 0);
  const auto out = dir / "out";
  const auto summary = json::parse(read_text_file(out / "prepare_summary.json"));
  EXPECT_EQ(summary["split"]["train"], 60);
  EXPECT_EQ(summary["split"]["test"], 20);
  EXPECT_EQ(summary["evalset"]["samples"], 16);
  EXPECT_EQ(summary["nonfood"]["kept"], 8);

  ASSERT_EQ(run({"--config", cfg, "build-traindata"}), 0);
  EXPECT_EQ(traindata::read_examples(out / "train_R.jsonl").size(), 60u);
  EXPECT_EQ(traindata::read_examples(out / "train_R_NF.jsonl").size(), 68u);
  EXPECT_EQ(traindata::read_examples(out / "train_R_MQ.jsonl").size(), 68u);

  // Faithful outputs for every eval sample.
  const auto evalset = dataset::load_evalset(out / "evalset.jsonl");
  std::vector<json> rows, lp;
  for (const auto& r : evalset.samples) {
    rows.push_back({{"sample_id", r.id}, {"generated_text", traindata::render_recipe_text(r)}});
    lp.push_back({{"sample_id", r.id}, {"token_logprobs", {0.0, 0.0}}});
  }
  write_jsonl(dir / "generated.jsonl", rows);
  write_jsonl(dir / "logprobs.jsonl", lp);
  ASSERT_EQ(run({"--config", cfg, "evaluate", "--generated", (dir / "generated.jsonl").string(), "--logprobs",
                 (dir / "logprobs.jsonl").string()}),
            0);
  const auto rep = report::load_report(out / "report.json");
  EXPECT_EQ(rep.model_label, "cli-test");
  EXPECT_EQ(rep.overall.format.completed, 16u);
  EXPECT_EQ(rep.overall.set_metrics.at(metrics::SetScope::All).f1, 1.0);
  EXPECT_EQ(rep.overall.bleu, 100.0);
  EXPECT_EQ(rep.overall.rouge_l, 100.0);
  EXPECT_EQ(*rep.overall.perplexity, 1.0);
  EXPECT_TRUE(fs::exists(out / "report.csv"));
  EXPECT_TRUE(fs::exists(out / "report.md"));
  EXPECT_EQ(read_jsonl(out / "parsed.jsonl").size(), 16u);

  ASSERT_EQ(run({"--config", cfg, "audit", "--verdicts", (out / "verdicts.jsonl").string()}), 0);
  EXPECT_EQ(read_jsonl(out / "audit.jsonl").size(), 8u);

  ASSERT_EQ(run({"--out", (dir / "cmp").string(), "report", (out / "report.json").string(), (out / "report.json").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "cmp" / "comparison.md"));

  // An output for a sample outside the eval set is a runtime failure.
  rows.push_back({{"sample_id", "ghost"}, {"generated_text", ""}});
  write_jsonl(dir / "generated_bad.jsonl", rows);
  EXPECT_EQ(run({"--config", cfg, "evaluate", "--generated", (dir / "generated_bad.jsonl").string()}), 1);
}

TEST(Cli, SeedOverrideChangesTheSplit) {
  const auto dir = make_workspace("cli_seed");
  const auto cfg = (dir / "config.json").string();
  ASSERT_EQ(run({"--config", cfg, "--out", (dir / "a").string(), "prepare"}), 0);
  ASSERT_EQ(run({"--config", cfg, "--out", (dir / "b").string(), "--seed", "77", "prepare"}), 0);
  ASSERT_EQ(run({"--config", cfg, "--out", (dir / "c").string(), "prepare"}), 0);
  EXPECT_EQ(read_text_file(dir / "a" / "test.jsonl"), read_text_file(dir / "c" / "test.jsonl"));
  EXPECT_NE(read_text_file(dir / "a" / "test.jsonl"), read_text_file(dir / "b" / "test.jsonl"));
}

TEST(Cli, RemoteModeWithoutCredentialIsAConfigError) {
  const auto dir = make_workspace("cli_remote");
  const auto cfg = (dir / "config.json").string();
  ASSERT_EQ(run({"--config", cfg, "prepare"}), 0);
  write_jsonl(dir / "g.jsonl", {});
  ::unsetenv("OPENAI_API_KEY");
  EXPECT_EQ(run({"--config", cfg, "--judge-mode", "remote", "evaluate", "--generated", (dir / "g.jsonl").string()}), 2);
}
