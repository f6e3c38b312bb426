#include "recipebench/cli.hpp"

#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "recipebench/dataset.hpp"
#include "recipebench/error.hpp"
#include "recipebench/judge_client.hpp"
#include "recipebench/parser.hpp"
#include "recipebench/templates.hpp"
#include "recipebench/traindata.hpp"

namespace recipebench::cli {

JudgeMode judge_mode_from_string(const std::string& name) {
  if (name == "offline") return JudgeMode::Offline;
  if (name == "remote") return JudgeMode::Remote;
  throw ConfigError("judge mode must be 'offline' or 'remote', got '" + name + "'");
}

namespace {

// Re-raises library errors with the pipeline step in the message.
template <typename Fn>
auto step(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
}

std::filesystem::path require_path(const RunConfig& config, const std::string& value, const std::string& key) {
  if (value.empty()) throw ConfigError("config paths." + key + " is not set");
  return config.resolve(value);
}

TemplateConfig templates_of(const RunConfig& config) {
  return config.paths.templates.empty() ? TemplateConfig{} : load_templates(config.resolve(config.paths.templates));
}

json reason_counts(const std::vector<dataset::RejectedRecord>& rejects) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : rejects) ++counts[r.reason];
  return counts;
}

}  // namespace

// ---- prepare ---------------------------------------------------------------

json cmd_prepare(const RunConfig& config, const std::filesystem::path& out_dir) {
  const auto taxonomy = dataset::load_taxonomy(require_path(config, config.paths.taxonomy, "taxonomy"));
  const auto corpus = step("load recipes", [&] {
    return dataset::load_recipes(require_path(config, config.paths.recipes, "recipes"), config.paths.recipes_format);
  });

  json summary;
  summary["input"] = {{"recipes", corpus.size()}, {"rejected", corpus.rejects.size()}, {"reject_reasons", reason_counts(corpus.rejects)}};

  auto split = step("split", [&] { return dataset::split_by_category(corpus, config.test_fraction, config.seeds.split); });
  summary["split"] = {{"train", split.train.size()}, {"test", split.test.size()}, {"test_fraction", config.test_fraction}};

  if (!config.paths.image_root.empty()) {
    const auto root = config.resolve(config.paths.image_root);
    json reasons = json::object();
    const auto filter = [&](const dataset::RecipeCorpus& c) {
      auto r = step("exclude broken images", [&] { return dataset::exclude_broken_images(c, root); });
      for (const auto& e : r.excluded) reasons[e.reason] = reasons.value(e.reason, 0) + 1;
      return r;
    };
    auto train = filter(split.train);
    auto test = filter(split.test);
    summary["images"] = {{"checked", true},
                         {"train_excluded", train.excluded.size()},
                         {"test_excluded", test.excluded.size()},
                         {"train", train.kept.size()},
                         {"test", test.kept.size()},
                         {"reasons", reasons}};
    split.train = std::move(train.kept);
    split.test = std::move(test.kept);
  } else {
    summary["images"] = {{"checked", false}};
  }

  const auto assigned = step("assign categories", [&] { return dataset::assign_eval_categories(split.test, taxonomy); });
  std::size_t mapped = 0;
  for (const auto& r : assigned.corpus.recipes) mapped += r.eval_category ? 1 : 0;
  summary["categories"] = {{"assigned", mapped}, {"unassigned", assigned.corpus.size() - mapped}, {"unmapped_keys", assigned.unmapped}};

  const auto evalset = step("sample eval set", [&] {
    return dataset::sample_balanced(assigned.corpus, config.per_category, config.seeds.sample);
  });
  summary["evalset"] = {{"samples", evalset.samples.size()},
                        {"per_category", evalset.per_category},
                        {"categories", evalset.counts_by_category().size()},
                        {"shortfalls", evalset.shortfalls}};

  dataset::write_recipes(out_dir / "train.jsonl", split.train.recipes);
  dataset::write_recipes(out_dir / "test.jsonl", assigned.corpus.recipes);
  dataset::write_recipes(out_dir / "evalset.jsonl", evalset.samples);

  if (!config.paths.captions.empty()) {
    const auto captions = step("load captions", [&] { return dataset::load_captions(config.resolve(config.paths.captions)); });
    const auto nonfood = dataset::filter_nonfood_captions(captions.records, config.excluded_supercategories);
    dataset::write_captions(out_dir / "nonfood.jsonl", nonfood);
    summary["nonfood"] = {{"captions", captions.records.size()}, {"rejected", captions.rejects.size()}, {"kept", nonfood.size()}};
  }
  write_text_file(out_dir / "prepare_summary.json", summary.dump(2) + "\n");
  return summary;
}

// ---- build-traindata -------------------------------------------------------

json cmd_build_traindata(const RunConfig& config, const std::filesystem::path& out_dir) {
  const auto templates = templates_of(config);
  const auto train_path = out_dir / "train.jsonl";
  if (!std::filesystem::exists(train_path)) throw IoError("prepared corpus not found: " + train_path.string() + " (run prepare first)");
  const auto train = step("load train corpus", [&] { return dataset::load_recipes(train_path, "jsonl"); });

  std::vector<dataset::CaptionRecord> nonfood;
  bool need_nonfood = false;
  for (auto r : config.regimes) need_nonfood |= r != traindata::Regime::R;
  if (need_nonfood) {
    const auto nonfood_path = out_dir / "nonfood.jsonl";
    if (!std::filesystem::exists(nonfood_path)) {
      throw IoError("non-food captions not found: " + nonfood_path.string() + " (configure paths.captions and run prepare)");
    }
    nonfood = step("load non-food captions", [&] { return dataset::load_captions(nonfood_path).records; });
  }

  json counts = json::object();
  for (auto regime : config.regimes) {
    std::vector<traindata::TrainingExample> examples = step(std::string("build ") + traindata::to_string(regime), [&] {
      switch (regime) {
        case traindata::Regime::R: return traindata::build_regime_r(train, templates);
        case traindata::Regime::RNF: return traindata::build_regime_rnf(train, nonfood, templates);
        case traindata::Regime::RMQ: return traindata::build_regime_rmq(train, nonfood, config.seeds.traindata, templates);
      }
      return std::vector<traindata::TrainingExample>{};
    });
    const auto path = out_dir / (std::string("train_") + traindata::file_tag(regime) + ".jsonl");
    counts[traindata::to_string(regime)] = traindata::write_examples(examples, path, templates);
  }
  return counts;
}

// ---- evaluate / judge ------------------------------------------------------

namespace {

struct Judged {
  dataset::EvalSet evalset;
  std::map<std::string, parser::ParsedOutput> parsed;
  std::vector<judge::JudgeOutcome> outcomes;
};

std::string require_credential(const RunConfig& config) {
  const char* key = std::getenv(config.judge.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("remote judging needs a credential in environment variable " + config.judge.api_key_env);
  }
  return key;
}

Judged parse_and_judge(const RunConfig& config, const std::filesystem::path& generated, JudgeMode mode,
                       const std::filesystem::path& out_dir) {
  std::string api_key;
  if (mode == JudgeMode::Remote) api_key = require_credential(config);

  const auto templates = templates_of(config);
  const auto normalizer = config.paths.synonyms.empty() ? judge::ItemNormalizer{}
                                                        : judge::load_synonyms(config.resolve(config.paths.synonyms));
  const auto lexicon = judge::load_lexicon(require_path(config, config.paths.lexicon, "lexicon"), normalizer);
  const std::string prompt = config.paths.judge_prompt.empty()
                                 ? judge::default_prompt_template()
                                 : judge::load_prompt_template(config.resolve(config.paths.judge_prompt));

  Judged out;
  out.evalset = step("load eval set", [&] { return dataset::load_evalset(config.evalset_path()); });
  const auto samples = step("load generated outputs", [&] { return parser::load_generated(generated); });

  parser::ParseOptions options;
  options.window_tokens = config.repetition_window;
  options.min_repeats = config.min_repeats;
  options.tokenizer_id = config.tokenizer_id;
  for (const auto& s : samples) {
    if (!out.evalset.find(s.sample_id)) throw DataError("generated output for unknown sample " + s.sample_id);
    if (!out.parsed.emplace(s.sample_id, parser::parse_generated(s.generated_text, templates, options)).second) {
      throw DataError("duplicate generated output for sample " + s.sample_id);
    }
  }
  std::vector<json> rows;
  for (const auto& r : out.evalset.samples) {
    auto it = out.parsed.find(r.id);
    if (it == out.parsed.end()) throw DataError("no generated output for eval sample " + r.id);
    rows.push_back(parser::parsed_to_json(it->second, r.id));
  }
  write_jsonl(out_dir / "parsed.jsonl", rows);

  const auto pairs = report::build_set_pairs(out.evalset, out.parsed);
  if (mode == JudgeMode::Offline) {
    out.outcomes.reserve(pairs.size());
    for (const auto& p : pairs) {
      judge::JudgeOutcome o;
      o.sample_id = p.sample_id;
      o.verdict = judge::judge_offline(p, normalizer, lexicon);
      out.outcomes.push_back(std::move(o));
    }
  } else {
    out.outcomes = judge::judge_remote(pairs, config.judge, prompt, lexicon, judge::http_transport(config.judge, api_key));
  }
  judge::write_outcomes(out_dir / "verdicts.jsonl", out.outcomes);
  return out;
}

}  // namespace

report::EvaluationReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& generated,
                                      const std::optional<std::filesystem::path>& logprobs, JudgeMode mode,
                                      const std::filesystem::path& out_dir) {
  std::optional<std::vector<metrics::LogProbRecord>> records;
  if (logprobs) records = step("load log-probabilities", [&] { return metrics::load_logprobs(*logprobs); });
  auto judged = parse_and_judge(config, generated, mode, out_dir);

  report::AssembleOptions options;
  options.model_label = config.model_label;
  options.tokenizer_id = config.tokenizer_id;
  options.bleu_max_n = config.bleu_max_n;
  options.seeds = config.seed_map();
  options.config_hash = config_hash(config);
  auto rep = step("assemble report", [&] {
    return report::assemble_report(judged.evalset, judged.parsed, judged.outcomes, records, options);
  });
  report::emit(rep, report::Format::Json, out_dir / "report.json");
  report::emit(rep, report::Format::Csv, out_dir / "report.csv");
  report::emit(rep, report::Format::Markdown, out_dir / "report.md");
  return rep;
}

std::vector<judge::JudgeOutcome> cmd_judge(const RunConfig& config, const std::filesystem::path& generated,
                                           JudgeMode mode, const std::filesystem::path& out_dir) {
  return parse_and_judge(config, generated, mode, out_dir).outcomes;
}

// ---- audit / report --------------------------------------------------------

std::size_t cmd_audit(const RunConfig& config, const std::filesystem::path& verdicts,
                      const std::filesystem::path& out_dir) {
  const auto evalset = step("load eval set", [&] { return dataset::load_evalset(config.evalset_path()); });
  const auto outcomes = step("load verdicts", [&] { return judge::load_outcomes(verdicts); });
  std::vector<judge::JudgeVerdict> accepted;
  for (const auto& o : outcomes) {
    if (o.verdict) accepted.push_back(*o.verdict);
  }
  const auto subset = step("sample audit", [&] {
    return judge::sample_audit(accepted, evalset, config.audit_per_category, config.seeds.audit);
  });
  write_text_file(out_dir / "audit.csv", judge::audit_sheet_csv(subset));
  std::vector<json> rows;
  for (const auto& e : subset.entries) {
    json row = judge::verdict_to_json(e.verdict);
    row["category"] = e.category;
    rows.push_back(std::move(row));
  }
  write_jsonl(out_dir / "audit.jsonl", rows);
  return subset.entries.size();
}

std::string cmd_report(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out_dir) {
  if (reports.empty()) throw ConfigError("report needs at least one report.json");
  std::vector<report::EvaluationReport> loaded;
  for (const auto& p : reports) loaded.push_back(step("load " + p.string(), [&] { return report::load_report(p); }));
  const std::string md = report::render_comparison_markdown(loaded);
  write_text_file(out_dir / "comparison.md", md);
  return md;
}

// ---- entry point -----------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Image-to-recipe benchmark toolkit"};
  app.name("recipebench");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string judge_mode;
  std::string tokenizer;
  std::string out;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--seed", seed, "Override every seed in the configuration");
  app.add_option("--judge-mode", judge_mode, "offline or remote")->check(CLI::IsMember({"offline", "remote"}));
  app.add_option("--tokenizer", tokenizer, "Tokenizer id");
  app.add_option("--out", out, "Output directory (overrides paths.output_dir)");

  auto* prepare = app.add_subcommand("prepare", "Split, filter and sample the corpora");
  auto* build = app.add_subcommand("build-traindata", "Write the instruction-tuning regimes");
  std::string generated;
  std::string logprobs;
  auto* evaluate = app.add_subcommand("evaluate", "Parse, judge and score generated outputs");
  evaluate->add_option("--generated", generated, "JSONL of {sample_id, generated_text}")->required();
  evaluate->add_option("--logprobs", logprobs, "JSONL of {sample_id, token_logprobs}");
  auto* judge_cmd = app.add_subcommand("judge", "Parse and judge generated outputs");
  judge_cmd->add_option("--generated", generated, "JSONL of {sample_id, generated_text}")->required();
  std::string verdicts;
  auto* audit = app.add_subcommand("audit", "Sample the manual audit subset");
  audit->add_option("--verdicts", verdicts, "verdicts.jsonl from evaluate or judge")->required();
  std::vector<std::string> report_files;
  auto* report_cmd = app.add_subcommand("report", "Compare report.json files");
  report_cmd->add_option("reports", report_files, "report.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (report_cmd->parsed()) {
      std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
      const auto out_dir = out.empty() ? std::filesystem::path(".") : std::filesystem::path(out);
      cmd_report(paths, out_dir);
      std::cerr << "wrote " << (out_dir / "comparison.md").string() << "\n";
      return 0;
    }

    if (config_path.empty()) throw ConfigError("--config is required");
    RunConfig config = load_run_config(config_path);
    if (seed) config.seeds = {*seed, *seed, *seed, *seed};
    if (!tokenizer.empty()) {
      if (!metrics::has_tokenizer(tokenizer)) throw ConfigError("unknown tokenizer: " + tokenizer);
      config.tokenizer_id = tokenizer;
    }
    if (!judge_mode.empty()) config.judge_mode = judge_mode;
    const auto out_dir = out.empty() ? config.output_dir() : std::filesystem::path(out);
    const JudgeMode mode = judge_mode_from_string(config.judge_mode);

    if (prepare->parsed()) {
      const auto summary = cmd_prepare(config, out_dir);
      std::cerr << "split " << summary["split"]["train"] << "/" << summary["split"]["test"] << ", eval set "
                << summary["evalset"]["samples"] << " samples\n";
    } else if (build->parsed()) {
      const auto counts = cmd_build_traindata(config, out_dir);
      for (const auto& [regime, n] : counts.items()) std::cerr << regime << ": " << n << " examples\n";
    } else if (evaluate->parsed()) {
      std::optional<std::filesystem::path> lp;
      if (!logprobs.empty()) lp = logprobs;
      const auto rep = cmd_evaluate(config, generated, lp, mode, out_dir);
      std::cerr << "evaluated " << rep.overall.format.total << " samples; excluded verdicts "
                << rep.provenance.excluded_verdicts << "\n";
    } else if (judge_cmd->parsed()) {
      const auto outcomes = cmd_judge(config, generated, mode, out_dir);
      std::size_t excluded = 0;
      for (const auto& o : outcomes) excluded += o.ok() ? 0 : 1;
      std::cerr << "judged " << outcomes.size() << " samples; excluded " << excluded << "\n";
    } else if (audit->parsed()) {
      const auto n = cmd_audit(config, verdicts, out_dir);
      std::cerr << "audit subset: " << n << " samples\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace recipebench::cli
