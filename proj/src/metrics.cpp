#include "recipebench/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "recipebench/error.hpp"

namespace recipebench::metrics {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

void require_same_tokenizer(const TokenSequence& a, const TokenSequence& b) {
  if (a.tokenizer_id != b.tokenizer_id) {
    throw DataError("token sequences come from different tokenizers: " + a.tokenizer_id + " vs " + b.tokenizer_id);
  }
}

std::unordered_map<std::string, std::uint64_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::unordered_map<std::string, std::uint64_t> counts;
  if (tokens.size() < n) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      key += tokens[i + k];
      key += '\x1f';
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

// ---- BLEU ------------------------------------------------------------------

void BleuStats::add(const TokenSequence& candidate, const TokenSequence& reference) {
  require_same_tokenizer(candidate, reference);
  candidate_length += candidate.size();
  reference_length += reference.size();
  for (int n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate.tokens, static_cast<std::size_t>(n));
    const auto ref = ngram_counts(reference.tokens, static_cast<std::size_t>(n));
    for (const auto& [gram, count] : cand) {
      totals[n - 1] += count;
      auto it = ref.find(gram);
      if (it != ref.end()) matches[n - 1] += std::min(count, it->second);
    }
  }
}

void BleuStats::merge(const BleuStats& other) {
  if (other.max_n != max_n) throw DataError("cannot merge BLEU statistics of different orders");
  for (int n = 0; n < max_n; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
}

double BleuStats::score() const {
  if (all_empty()) throw DataError("BLEU undefined: every candidate and reference is empty");
  if (candidate_length == 0) return 0.0;
  // Orders no candidate is long enough to have are left out of the mean.
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < max_n; ++n) {
    if (totals[n] == 0) continue;
    const double p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    log_sum += std::log(std::max(p, kBleuPrecisionFloor));
    ++orders;
  }
  const double c = static_cast<double>(candidate_length);
  const double r = static_cast<double>(reference_length);
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * brevity * std::exp(log_sum / orders);
}

BleuStats bleu_stats(const std::vector<SequencePair>& pairs, int max_n) {
  if (max_n < 1) throw DataError("BLEU order must be >= 1");
  BleuStats stats(max_n);
  for (const auto& [candidate, reference] : pairs) stats.add(candidate, reference);
  return stats;
}

double corpus_bleu(const std::vector<SequencePair>& pairs, int max_n) {
  if (pairs.empty()) throw DataError("BLEU needs at least one pair");
  return bleu_stats(pairs, max_n).score();
}

// ---- ROUGE-L ---------------------------------------------------------------

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Row over the shorter sequence.
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diagonal + 1 : std::max(row[j], row[j - 1]);
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) { return lcs_length(a.tokens, b.tokens); }

RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  require_same_tokenizer(candidate, reference);
  if (candidate.empty() || reference.empty()) return {};
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return {};
  RougeScore s;
  s.precision = lcs / static_cast<double>(candidate.size());
  s.recall = lcs / static_cast<double>(reference.size());
  s.f = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

void RougeAccumulator::add(const RougeScore& score) { f_values.push_back(score.f); }

void RougeAccumulator::merge(const RougeAccumulator& other) {
  f_values.insert(f_values.end(), other.f_values.begin(), other.f_values.end());
}

double RougeAccumulator::score() const {
  if (f_values.empty()) return 0.0;
  return 100.0 * pairwise_sum(f_values) / static_cast<double>(f_values.size());
}

// ---- perplexity ------------------------------------------------------------

void PerplexityStats::merge(const PerplexityStats& other) {
  logprob_sum += other.logprob_sum;
  token_count += other.token_count;
}

double PerplexityStats::perplexity() const {
  if (token_count == 0) throw DataError("perplexity needs at least one token");
  return std::exp(-logprob_sum / static_cast<double>(token_count));
}

PerplexityStats perplexity_stats(const std::vector<LogProbRecord>& records) {
  std::vector<double> all;
  for (const auto& record : records) {
    for (double lp : record.token_logprobs) {
      if (!std::isfinite(lp) || lp > 0.0) {
        throw DataError("invalid log-probability in sample " + record.sample_id + " (must be finite and <= 0)");
      }
      all.push_back(lp);
    }
  }
  PerplexityStats stats;
  stats.logprob_sum = pairwise_sum(all);
  stats.token_count = all.size();
  return stats;
}

double corpus_perplexity(const std::vector<LogProbRecord>& records) { return perplexity_stats(records).perplexity(); }

std::vector<LogProbRecord> load_logprobs(const std::filesystem::path& path) {
  std::vector<LogProbRecord> records;
  for (const auto& row : read_jsonl(path)) {
    try {
      records.push_back({row.at("sample_id").get<std::string>(), row.at("token_logprobs").get<std::vector<double>>()});
    } catch (const json::exception& e) {
      throw DataError("malformed log-probability record in " + path.string() + ": " + e.what());
    }
  }
  return records;
}

// ---- set metrics -----------------------------------------------------------

const char* to_string(SetScope scope) {
  switch (scope) {
    case SetScope::All: return "all";
    case SetScope::Seasoning: return "seasoning";
    case SetScope::NonSeasoning: return "non_seasoning";
  }
  return "all";
}

SetScope set_scope_from_string(const std::string& name) {
  for (auto s : kAllScopes) {
    if (name == to_string(s)) return s;
  }
  throw DataError("unknown set scope: " + name);
}

ScopeMetrics scope_metrics_from_totals(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ScopeMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  const auto ratio = [&](std::uint64_t num, std::uint64_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.iou = ratio(tp, tp + fp + fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

MicroSetReport micro_set_metrics(const std::vector<SetCounts>& counts) {
  if (counts.empty()) throw DataError("micro set metrics need at least one count");
  std::map<SetScope, std::array<std::uint64_t, 3>> totals;
  for (auto s : kAllScopes) totals[s] = {0, 0, 0};
  for (const auto& c : counts) {
    if (!c.partition_holds()) {
      throw DataError("partition identity violated: tp+fp must equal |S1| and tp+fn must equal |S2|");
    }
    auto& t = totals[c.scope];
    t[0] += c.tp;
    t[1] += c.fp;
    t[2] += c.fn;
  }
  MicroSetReport report;
  for (const auto& [scope, t] : totals) report.scopes[scope] = scope_metrics_from_totals(t[0], t[1], t[2]);
  return report;
}

json score_record(const std::string& metric, double value, const std::string& tokenizer_id, json parameters) {
  return {{"metric", metric}, {"value", value}, {"tokenizer_id", tokenizer_id}, {"parameters", std::move(parameters)}};
}

}  // namespace recipebench::metrics
