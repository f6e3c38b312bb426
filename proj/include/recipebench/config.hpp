#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "recipebench/judge_client.hpp"
#include "recipebench/jsonl.hpp"
#include "recipebench/traindata.hpp"

namespace recipebench::cli {

// Paths are stored as written; resolve() interprets relative ones against the
// directory holding the config file.
struct RunPaths {
  std::string recipes;
  std::string recipes_format = "jsonl";
  std::string captions;
  std::string image_root;  // empty skips the broken-image step
  std::string taxonomy;
  std::string templates;  // empty uses built-in templates
  std::string lexicon;
  std::string synonyms;      // empty disables synonym folding
  std::string judge_prompt;  // empty uses the built-in prompt
  std::string output_dir = "out";
  std::string evalset;  // empty means <output_dir>/evalset.jsonl
};

struct RunSeeds {
  std::uint64_t split = 0;
  std::uint64_t sample = 0;
  std::uint64_t traindata = 0;
  std::uint64_t audit = 0;
};

struct RunConfig {
  std::filesystem::path base_dir;
  RunPaths paths;
  RunSeeds seeds;
  double test_fraction = 0.2;
  std::size_t per_category = 100;
  std::set<std::string> excluded_supercategories = {"kitchen", "food"};
  std::vector<traindata::Regime> regimes = {traindata::Regime::R, traindata::Regime::RNF, traindata::Regime::RMQ};
  std::string judge_mode = "offline";
  judge::JudgeConfig judge;
  std::string tokenizer_id = "fallback";
  int bleu_max_n = 4;
  std::size_t repetition_window = 64;
  std::size_t min_repeats = 3;
  std::size_t audit_per_category = 2;
  std::string model_label = "model";
  json training = json::object();  // descriptive only

  std::filesystem::path resolve(const std::string& path) const;
  std::filesystem::path output_dir() const { return resolve(paths.output_dir); }
  std::filesystem::path evalset_path() const;
  // Seeds as a name -> value map for report provenance.
  std::map<std::string, std::uint64_t> seed_map() const;
};

// Throws ConfigError for unknown keys, wrong types or invalid values.
RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir);
json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

// sha256 of the canonical JSON form (sorted keys, compact).
std::string config_hash(const RunConfig& config);

}  // namespace recipebench::cli
