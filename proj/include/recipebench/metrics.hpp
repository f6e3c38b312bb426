#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recipebench/jsonl.hpp"
#include "recipebench/tokenizer.hpp"

namespace recipebench::metrics {

using SequencePair = std::pair<TokenSequence, TokenSequence>;  // (candidate, reference)

// Summation in a fixed pairwise order, so results depend only on the input
// sequence and not on how work was scheduled.
double pairwise_sum(std::span<const double> values);

// ---- BLEU ------------------------------------------------------------------

// Floor applied to a pooled n-gram precision before the log, so tiny batches
// with a zero-match order do not produce log(0).
inline constexpr double kBleuPrecisionFloor = 1e-9;

// Sufficient statistics of corpus BLEU; mergeable across batches.
struct BleuStats {
  int max_n = 4;
  std::vector<std::uint64_t> matches;  // clipped n-gram matches, index n-1
  std::vector<std::uint64_t> totals;   // candidate n-gram counts, index n-1
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;

  explicit BleuStats(int max_n_ = 4) : max_n(max_n_), matches(max_n_, 0), totals(max_n_, 0) {}
  void add(const TokenSequence& candidate, const TokenSequence& reference);
  void merge(const BleuStats& other);
  // Score in [0, 100]. Throws DataError when both sides are empty overall.
  double score() const;
  bool all_empty() const { return candidate_length == 0 && reference_length == 0; }

  friend bool operator==(const BleuStats&, const BleuStats&) = default;
};

BleuStats bleu_stats(const std::vector<SequencePair>& pairs, int max_n = 4);

// Pooled n-gram precisions, geometric mean over 1..max_n, brevity penalty,
// scaled to [0, 100]. Throws DataError on an empty batch, mismatched
// tokenizers, or when every candidate and reference is empty.
double corpus_bleu(const std::vector<SequencePair>& pairs, int max_n = 4);

// ---- ROUGE-L ---------------------------------------------------------------

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// O(|a|·|b|) time, O(min(|a|,|b|)) memory.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

// F uses beta = 1. Empty candidate or reference scores (0, 0, 0).
RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

// Accumulator for the macro average of per-sample ROUGE-L F.
struct RougeAccumulator {
  std::vector<double> f_values;

  void add(const RougeScore& score);
  void merge(const RougeAccumulator& other);
  std::uint64_t count() const { return f_values.size(); }
  // Mean F times 100; 0 when empty.
  double score() const;

  friend bool operator==(const RougeAccumulator&, const RougeAccumulator&) = default;
};

// ---- perplexity ------------------------------------------------------------

struct LogProbRecord {
  std::string sample_id;
  std::vector<double> token_logprobs;  // natural log, each <= 0
};

struct PerplexityStats {
  double logprob_sum = 0.0;
  std::uint64_t token_count = 0;

  void merge(const PerplexityStats& other);
  double perplexity() const;  // throws DataError when token_count == 0

  friend bool operator==(const PerplexityStats&, const PerplexityStats&) = default;
};

PerplexityStats perplexity_stats(const std::vector<LogProbRecord>& records);

// exp(-(sum of logprobs) / (token count)) pooled over every token.
double corpus_perplexity(const std::vector<LogProbRecord>& records);

std::vector<LogProbRecord> load_logprobs(const std::filesystem::path& path);

// ---- set metrics -----------------------------------------------------------

enum class SetScope { All, Seasoning, NonSeasoning };

inline constexpr SetScope kAllScopes[] = {SetScope::All, SetScope::NonSeasoning, SetScope::Seasoning};

const char* to_string(SetScope scope);
SetScope set_scope_from_string(const std::string& name);

struct SetCounts {
  std::uint64_t tp = 0;               // |S1 ∩ S2|
  std::uint64_t fp = 0;               // |S1 \ S2|
  std::uint64_t fn = 0;               // |S2 \ S1|
  SetScope scope = SetScope::All;
  std::uint64_t generated_size = 0;   // |S1| restricted to scope
  std::uint64_t truth_size = 0;       // |S2| restricted to scope

  // Counts whose sizes are consistent by construction.
  static SetCounts of(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, SetScope scope = SetScope::All) {
    return {tp, fp, fn, scope, tp + fp, tp + fn};
  }
  bool partition_holds() const { return tp + fp == generated_size && tp + fn == truth_size; }
};

struct ScopeMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  bool degenerate = false;  // some denominator was zero

  friend bool operator==(const ScopeMetrics&, const ScopeMetrics&) = default;
};

ScopeMetrics scope_metrics_from_totals(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

struct MicroSetReport {
  std::map<SetScope, ScopeMetrics> scopes;

  const ScopeMetrics& at(SetScope scope) const { return scopes.at(scope); }
  friend bool operator==(const MicroSetReport&, const MicroSetReport&) = default;
};

// Pools counts per scope before taking ratios. Every scope is present in the
// result. Throws DataError for an empty list or a partition violation.
MicroSetReport micro_set_metrics(const std::vector<SetCounts>& counts);

// Score record: {metric, value, tokenizer_id, parameters}.
json score_record(const std::string& metric, double value, const std::string& tokenizer_id, json parameters);

}  // namespace recipebench::metrics
