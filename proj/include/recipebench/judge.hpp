#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "recipebench/dataset.hpp"
#include "recipebench/metrics.hpp"

namespace recipebench::judge {

// Generated list S1 and ground-truth list S2 for one sample. Items are
// trimmed, blank items dropped, exact duplicates collapsed.
struct IngredientSetPair {
  std::string sample_id;
  std::vector<std::string> generated;
  std::vector<std::string> truth;
  std::size_t generated_duplicates = 0;
  std::size_t truth_duplicates = 0;
};

IngredientSetPair make_set_pair(std::string sample_id, const std::vector<std::string>& generated,
                                const std::vector<std::string>& truth);

// ---- normalization ---------------------------------------------------------

// Item key: NFKC, case fold, all whitespace removed, katakana folded to
// hiragana, then mapped through the synonym table.
class ItemNormalizer {
 public:
  ItemNormalizer() = default;
  // synonyms: canonical form -> variants. Keys and variants are folded.
  explicit ItemNormalizer(const std::map<std::string, std::vector<std::string>>& synonyms);

  std::string fold(std::string_view item) const;  // without synonym lookup
  std::string key(std::string_view item) const;

 private:
  std::map<std::string, std::string> variant_to_canonical_;
};

// JSON object {canonical: [variant, ...]}.
ItemNormalizer load_synonyms(const std::filesystem::path& path);

class SeasoningLexicon {
 public:
  SeasoningLexicon() = default;
  SeasoningLexicon(const std::vector<std::string>& words, ItemNormalizer normalizer = {});

  bool contains(std::string_view item) const;
  std::size_t size() const { return keys_.size(); }
  const ItemNormalizer& normalizer() const { return normalizer_; }

 private:
  ItemNormalizer normalizer_;
  std::set<std::string> keys_;
};

// One word per line; blank lines and lines starting with '#' are skipped.
SeasoningLexicon load_lexicon(const std::filesystem::path& path, ItemNormalizer normalizer = {});

// ---- verdicts --------------------------------------------------------------

enum class VerdictSource { Remote, Offline, Cache };

const char* to_string(VerdictSource source);
VerdictSource verdict_source_from_string(const std::string& name);

struct MatchedItem {
  std::string generated;
  std::string truth;
  bool seasoning = false;
  friend bool operator==(const MatchedItem&, const MatchedItem&) = default;
};

struct UnmatchedItem {
  std::string item;
  bool seasoning = false;
  friend bool operator==(const UnmatchedItem&, const UnmatchedItem&) = default;
};

struct JudgeVerdict {
  std::string sample_id;
  std::vector<MatchedItem> matched;
  std::vector<UnmatchedItem> generated_only;
  std::vector<UnmatchedItem> truth_only;
  VerdictSource source = VerdictSource::Offline;
  std::string raw_response;
  bool repaired = false;
  std::vector<std::string> repair_notes;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

// Both partition identities hold and every item is drawn, once, from the
// corresponding input list.
bool partition_holds(const JudgeVerdict& verdict, const IngredientSetPair& pair);

// Counts for the all / seasoning / non-seasoning scopes. A matched pair's
// scope follows its seasoning flag.
std::vector<metrics::SetCounts> verdict_counts(const JudgeVerdict& verdict);

JudgeVerdict judge_offline(const IngredientSetPair& pair, const ItemNormalizer& normalizer,
                           const SeasoningLexicon& lexicon);

// ---- prompt and response ---------------------------------------------------

// Placeholders: {generated}, {truth}, {schema}.
std::string default_prompt_template();
std::string load_prompt_template(const std::filesystem::path& path);

// The JSON schema the judge is asked to emit, as printed in the prompt.
std::string verdict_schema_text();

inline constexpr const char* kEmptyListMarker = "(none)";

std::string build_judge_prompt(const IngredientSetPair& pair, const std::string& prompt_template);

// Extracts the JSON object from a judge response (code fences and
// surrounding prose tolerated). Returns nullopt when none parses.
std::optional<json> extract_json_object(std::string_view response);

// Maps the judge's items back onto the input lists and enforces the
// partition identities, with at most one repair pass. Throws VerdictError
// carrying the raw response when that fails.
JudgeVerdict parse_verdict(std::string_view response, const IngredientSetPair& pair, const SeasoningLexicon& lexicon,
                           VerdictSource source = VerdictSource::Remote);

// ---- outcomes --------------------------------------------------------------

// A verdict, or an explicit exclusion with the reason.
struct JudgeOutcome {
  std::string sample_id;
  std::optional<JudgeVerdict> verdict;
  std::string error;
  std::string raw_response;  // kept for exclusions
  int attempts = 0;

  bool ok() const { return verdict.has_value(); }
};

json verdict_to_json(const JudgeVerdict& verdict);
JudgeVerdict verdict_from_json(const json& row);
json outcome_to_json(const JudgeOutcome& outcome);
JudgeOutcome outcome_from_json(const json& row);
void write_outcomes(const std::filesystem::path& path, const std::vector<JudgeOutcome>& outcomes);
std::vector<JudgeOutcome> load_outcomes(const std::filesystem::path& path);

// ---- audit -----------------------------------------------------------------

struct AuditEntry {
  std::string category;
  JudgeVerdict verdict;
};

struct AuditSubset {
  std::vector<AuditEntry> entries;  // sorted by (category, sample_id)
  std::size_t per_category = 0;
};

// min(per_category, available) verdicts per evaluation category, seeded.
// Throws DataError for a verdict whose sample is not in the eval set.
AuditSubset sample_audit(const std::vector<JudgeVerdict>& verdicts, const dataset::EvalSet& evalset,
                         std::size_t per_category, std::uint64_t seed);

// One row per judged item with an empty "correct" column to fill in.
std::string audit_sheet_csv(const AuditSubset& subset);

}  // namespace recipebench::judge
