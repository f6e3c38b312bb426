#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recipebench/dataset.hpp"
#include "recipebench/judge.hpp"
#include "recipebench/metrics.hpp"
#include "recipebench/parser.hpp"

namespace recipebench::report {

struct FormatStats {
  std::uint64_t completed = 0;
  std::uint64_t refusal = 0;
  std::uint64_t error_title = 0;
  std::uint64_t error_ingredients = 0;
  std::uint64_t error_procedures = 0;
  std::uint64_t total = 0;

  void add(const parser::ParsedOutput& parsed);
  void merge(const FormatStats& other);
  bool consistent() const;

  friend bool operator==(const FormatStats&, const FormatStats&) = default;
};

FormatStats compute_format_stats(const std::vector<parser::ParsedOutput>& parsed);

// Metrics for one slice of the eval set (overall or one category). Keeps the
// sufficient statistics so slices can be merged.
struct MetricBlock {
  FormatStats format;
  std::uint64_t judged = 0;
  std::uint64_t excluded_verdicts = 0;
  std::map<metrics::SetScope, metrics::ScopeMetrics> set_metrics;
  metrics::BleuStats bleu_stats;
  metrics::RougeAccumulator rouge;
  std::optional<metrics::PerplexityStats> perplexity_stats;

  double bleu = 0.0;     // 0 when every candidate and reference is empty
  double rouge_l = 0.0;  // mean F x 100
  std::optional<double> perplexity;

  explicit MetricBlock(int bleu_max_n = 4);
  void add_counts(const std::vector<metrics::SetCounts>& counts);
  void merge(const MetricBlock& other);
  // Recomputes the derived numbers from the sufficient statistics.
  void finalize();

  friend bool operator==(const MetricBlock&, const MetricBlock&) = default;
};

struct Provenance {
  std::string tokenizer_id;
  std::map<std::string, std::uint64_t> judge_sources;  // source -> verdict count
  std::uint64_t excluded_verdicts = 0;
  std::map<std::string, std::uint64_t> seeds;
  std::string config_hash;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct EvaluationReport {
  std::string model_label;
  MetricBlock overall;
  std::map<std::string, MetricBlock> per_category;
  Provenance provenance;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

struct AssembleOptions {
  std::string model_label;
  std::string tokenizer_id = metrics::kFallbackTokenizer;
  int bleu_max_n = 4;
  std::map<std::string, std::uint64_t> seeds;
  std::string config_hash;
};

// Judge inputs for every eval sample. S1 is empty for refusals and for
// outputs whose ingredients element is flagged.
std::vector<judge::IngredientSetPair> build_set_pairs(const dataset::EvalSet& evalset,
                                                      const std::map<std::string, parser::ParsedOutput>& parsed);

// Throws DataError when parsed outputs, outcomes or log-probabilities name a
// sample outside the eval set, or an eval sample has no parsed output. A
// sample without an outcome counts as an excluded verdict.
EvaluationReport assemble_report(const dataset::EvalSet& evalset,
                                 const std::map<std::string, parser::ParsedOutput>& parsed,
                                 const std::vector<judge::JudgeOutcome>& outcomes,
                                 const std::optional<std::vector<metrics::LogProbRecord>>& logprobs,
                                 const AssembleOptions& options);

// Counts add and pooled metrics are recomputed. Labels and tokenizers must
// agree.
EvaluationReport merge_reports(const EvaluationReport& a, const EvaluationReport& b);

enum class Format { Json, Csv, Markdown };

Format format_from_string(const std::string& name);

json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const json& doc);
std::string render_json(const EvaluationReport& report);
std::string render_csv(const EvaluationReport& report);
std::string render_markdown(const EvaluationReport& report);
// One row per report in both tables.
std::string render_comparison_markdown(const std::vector<EvaluationReport>& reports);

void emit(const EvaluationReport& report, Format format, const std::filesystem::path& path);
EvaluationReport load_report(const std::filesystem::path& path);

}  // namespace recipebench::report
