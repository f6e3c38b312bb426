#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recipebench/config.hpp"
#include "recipebench/judge.hpp"
#include "recipebench/report.hpp"

namespace recipebench::cli {

enum class JudgeMode { Remote, Offline };

JudgeMode judge_mode_from_string(const std::string& name);

// Writes train.jsonl, test.jsonl, evalset.jsonl, nonfood.jsonl (when
// captions are configured) and prepare_summary.json. Returns the summary.
json cmd_prepare(const RunConfig& config, const std::filesystem::path& out_dir);

// One train_<tag>.jsonl per configured regime, built from <out_dir>/train.jsonl
// and <out_dir>/nonfood.jsonl. Returns {regime: count}.
json cmd_build_traindata(const RunConfig& config, const std::filesystem::path& out_dir);

// parse -> judge -> metrics -> report. Writes parsed.jsonl, verdicts.jsonl,
// report.json, report.csv and report.md.
report::EvaluationReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& generated,
                                      const std::optional<std::filesystem::path>& logprobs, JudgeMode mode,
                                      const std::filesystem::path& out_dir);

// parse -> judge only; writes verdicts.jsonl.
std::vector<judge::JudgeOutcome> cmd_judge(const RunConfig& config, const std::filesystem::path& generated,
                                           JudgeMode mode, const std::filesystem::path& out_dir);

// Writes audit.csv (to mark by hand) and audit.jsonl. Returns the subset size.
std::size_t cmd_audit(const RunConfig& config, const std::filesystem::path& verdicts,
                      const std::filesystem::path& out_dir);

// Merges report.json files into comparison.md (one row per model label).
std::string cmd_report(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out_dir);

// Entry point of the recipebench tool. Exit codes: 0 success, 1 runtime
// failure, 2 configuration error.
int run_cli(int argc, const char* const* argv);

}  // namespace recipebench::cli
