#include "recipebench/config.hpp"

#include "recipebench/error.hpp"
#include "recipebench/hash.hpp"
#include "recipebench/tokenizer.hpp"

namespace recipebench::cli {

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  if (path.empty()) return {};
  std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path RunConfig::evalset_path() const {
  return paths.evalset.empty() ? output_dir() / "evalset.jsonl" : resolve(paths.evalset);
}

std::map<std::string, std::uint64_t> RunConfig::seed_map() const {
  return {{"split", seeds.split}, {"sample", seeds.sample}, {"traindata", seeds.traindata}, {"audit", seeds.audit}};
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + where + "." + key);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key " + where + "." + key + " has the wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  reject_unknown(doc,
                 {"paths", "seeds", "dataset", "regimes", "judge_mode", "judge", "tokenizer", "metrics", "audit",
                  "model_label", "training"},
                 "config");

  if (doc.contains("paths")) {
    const auto& p = doc.at("paths");
    reject_unknown(p,
                   {"recipes", "recipes_format", "captions", "image_root", "taxonomy", "templates", "lexicon",
                    "synonyms", "judge_prompt", "output_dir", "evalset"},
                   "paths");
    read(p, "recipes", c.paths.recipes, "paths");
    read(p, "recipes_format", c.paths.recipes_format, "paths");
    read(p, "captions", c.paths.captions, "paths");
    read(p, "image_root", c.paths.image_root, "paths");
    read(p, "taxonomy", c.paths.taxonomy, "paths");
    read(p, "templates", c.paths.templates, "paths");
    read(p, "lexicon", c.paths.lexicon, "paths");
    read(p, "synonyms", c.paths.synonyms, "paths");
    read(p, "judge_prompt", c.paths.judge_prompt, "paths");
    read(p, "output_dir", c.paths.output_dir, "paths");
    read(p, "evalset", c.paths.evalset, "paths");
  }
  if (doc.contains("seeds")) {
    const auto& s = doc.at("seeds");
    reject_unknown(s, {"split", "sample", "traindata", "audit"}, "seeds");
    read(s, "split", c.seeds.split, "seeds");
    read(s, "sample", c.seeds.sample, "seeds");
    read(s, "traindata", c.seeds.traindata, "seeds");
    read(s, "audit", c.seeds.audit, "seeds");
  }
  if (doc.contains("dataset")) {
    const auto& d = doc.at("dataset");
    reject_unknown(d, {"test_fraction", "per_category", "excluded_supercategories"}, "dataset");
    read(d, "test_fraction", c.test_fraction, "dataset");
    read(d, "per_category", c.per_category, "dataset");
    read(d, "excluded_supercategories", c.excluded_supercategories, "dataset");
  }
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("dataset.test_fraction must be in (0, 1)");
  if (c.per_category == 0) throw ConfigError("dataset.per_category must be >= 1");

  if (doc.contains("regimes")) {
    std::vector<std::string> names;
    read(doc, "regimes", names, "config");
    c.regimes.clear();
    try {
      for (const auto& n : names) c.regimes.push_back(traindata::regime_from_string(n));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  read(doc, "judge_mode", c.judge_mode, "config");
  if (c.judge_mode != "offline" && c.judge_mode != "remote") {
    throw ConfigError("judge_mode must be 'offline' or 'remote'");
  }
  if (doc.contains("judge")) c.judge = judge::judge_config_from_json(doc.at("judge"));
  if (!c.judge.cache_dir.empty()) c.judge.cache_dir = c.resolve(c.judge.cache_dir).string();

  read(doc, "tokenizer", c.tokenizer_id, "config");
  if (!metrics::has_tokenizer(c.tokenizer_id)) throw ConfigError("unknown tokenizer: " + c.tokenizer_id);
  if (doc.contains("metrics")) {
    const auto& m = doc.at("metrics");
    reject_unknown(m, {"bleu_max_n", "repetition_window", "min_repeats"}, "metrics");
    read(m, "bleu_max_n", c.bleu_max_n, "metrics");
    read(m, "repetition_window", c.repetition_window, "metrics");
    read(m, "min_repeats", c.min_repeats, "metrics");
  }
  if (c.bleu_max_n < 1) throw ConfigError("metrics.bleu_max_n must be >= 1");
  if (c.repetition_window == 0) throw ConfigError("metrics.repetition_window must be >= 1");
  if (c.min_repeats < 2) throw ConfigError("metrics.min_repeats must be >= 2");
  if (doc.contains("audit")) {
    reject_unknown(doc.at("audit"), {"per_category"}, "audit");
    read(doc.at("audit"), "per_category", c.audit_per_category, "audit");
  }
  read(doc, "model_label", c.model_label, "config");
  if (doc.contains("training")) c.training = doc.at("training");
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json regimes = json::array();
  for (auto r : c.regimes) regimes.push_back(traindata::to_string(r));
  json judge = judge::judge_config_to_json(c.judge);
  return {{"paths",
           {{"recipes", c.paths.recipes},
            {"recipes_format", c.paths.recipes_format},
            {"captions", c.paths.captions},
            {"image_root", c.paths.image_root},
            {"taxonomy", c.paths.taxonomy},
            {"templates", c.paths.templates},
            {"lexicon", c.paths.lexicon},
            {"synonyms", c.paths.synonyms},
            {"judge_prompt", c.paths.judge_prompt},
            {"output_dir", c.paths.output_dir},
            {"evalset", c.paths.evalset}}},
          {"seeds", {{"split", c.seeds.split}, {"sample", c.seeds.sample}, {"traindata", c.seeds.traindata}, {"audit", c.seeds.audit}}},
          {"dataset",
           {{"test_fraction", c.test_fraction},
            {"per_category", c.per_category},
            {"excluded_supercategories", c.excluded_supercategories}}},
          {"regimes", std::move(regimes)},
          {"judge_mode", c.judge_mode},
          {"judge", std::move(judge)},
          {"tokenizer", c.tokenizer_id},
          {"metrics", {{"bleu_max_n", c.bleu_max_n}, {"repetition_window", c.repetition_window}, {"min_repeats", c.min_repeats}}},
          {"audit", {{"per_category", c.audit_per_category}}},
          {"model_label", c.model_label},
          {"training", c.training}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  const json doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
  const auto base = std::filesystem::absolute(path).parent_path();
  return run_config_from_json(doc, base);
}

std::string config_hash(const RunConfig& c) {
  json doc = run_config_to_json(c);
  // The cache location is resolved against the config directory; hash the
  // portable part only.
  doc["judge"].erase("cache_dir");
  return sha256_hex(doc.dump());
}

}  // namespace recipebench::cli
