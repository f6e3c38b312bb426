#include "recipebench/report.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "recipebench/error.hpp"
#include "recipebench/text.hpp"
#include "recipebench/tokenizer.hpp"

namespace recipebench::report {

// ---- format stats ----------------------------------------------------------

void FormatStats::add(const parser::ParsedOutput& p) {
  ++total;
  if (!p.completed()) {
    ++refusal;
    return;
  }
  ++completed;
  if (p.has_error(parser::Element::Title)) ++error_title;
  if (p.has_error(parser::Element::Ingredients)) ++error_ingredients;
  if (p.has_error(parser::Element::Procedures)) ++error_procedures;
}

void FormatStats::merge(const FormatStats& o) {
  completed += o.completed;
  refusal += o.refusal;
  error_title += o.error_title;
  error_ingredients += o.error_ingredients;
  error_procedures += o.error_procedures;
  total += o.total;
}

bool FormatStats::consistent() const {
  return completed + refusal == total && error_title <= completed && error_ingredients <= completed &&
         error_procedures <= completed;
}

FormatStats compute_format_stats(const std::vector<parser::ParsedOutput>& parsed) {
  FormatStats s;
  for (const auto& p : parsed) s.add(p);
  return s;
}

// ---- metric blocks ---------------------------------------------------------

MetricBlock::MetricBlock(int bleu_max_n) : bleu_stats(bleu_max_n) {
  for (auto s : metrics::kAllScopes) set_metrics[s] = metrics::scope_metrics_from_totals(0, 0, 0);
}

void MetricBlock::add_counts(const std::vector<metrics::SetCounts>& counts) {
  for (const auto& c : counts) {
    if (!c.partition_holds()) throw DataError("set counts violate the partition identities");
    auto& m = set_metrics[c.scope];
    m.tp += c.tp;
    m.fp += c.fp;
    m.fn += c.fn;
  }
}

void MetricBlock::merge(const MetricBlock& o) {
  format.merge(o.format);
  judged += o.judged;
  excluded_verdicts += o.excluded_verdicts;
  for (const auto& [scope, m] : o.set_metrics) {
    auto& mine = set_metrics[scope];
    mine.tp += m.tp;
    mine.fp += m.fp;
    mine.fn += m.fn;
  }
  bleu_stats.merge(o.bleu_stats);
  rouge.merge(o.rouge);
  if (o.perplexity_stats) {
    if (!perplexity_stats) perplexity_stats.emplace();
    perplexity_stats->merge(*o.perplexity_stats);
  }
}

void MetricBlock::finalize() {
  for (auto& [scope, m] : set_metrics) m = metrics::scope_metrics_from_totals(m.tp, m.fp, m.fn);
  bleu = bleu_stats.all_empty() ? 0.0 : bleu_stats.score();
  rouge_l = rouge.score();
  perplexity.reset();
  if (perplexity_stats && perplexity_stats->token_count > 0) perplexity = perplexity_stats->perplexity();
}

// ---- assembly --------------------------------------------------------------

namespace {

std::vector<std::string> ingredient_names(const std::vector<dataset::IngredientEntry>& entries) {
  std::vector<std::string> names;
  names.reserve(entries.size());
  for (const auto& e : entries) names.push_back(e.name);
  return names;
}

std::vector<std::string> generated_ingredients(const parser::ParsedOutput& p) {
  if (!p.completed() || p.has_error(parser::Element::Ingredients) || !p.ingredients) return {};
  return ingredient_names(*p.ingredients);
}

}  // namespace

std::vector<judge::IngredientSetPair> build_set_pairs(const dataset::EvalSet& evalset,
                                                      const std::map<std::string, parser::ParsedOutput>& parsed) {
  std::vector<judge::IngredientSetPair> pairs;
  pairs.reserve(evalset.samples.size());
  for (const auto& r : evalset.samples) {
    auto it = parsed.find(r.id);
    if (it == parsed.end()) throw DataError("no generated output for eval sample " + r.id);
    pairs.push_back(judge::make_set_pair(r.id, generated_ingredients(it->second), ingredient_names(r.ingredients)));
  }
  return pairs;
}

EvaluationReport assemble_report(const dataset::EvalSet& evalset,
                                 const std::map<std::string, parser::ParsedOutput>& parsed,
                                 const std::vector<judge::JudgeOutcome>& outcomes,
                                 const std::optional<std::vector<metrics::LogProbRecord>>& logprobs,
                                 const AssembleOptions& options) {
  std::set<std::string> ids;
  for (const auto& r : evalset.samples) ids.insert(r.id);
  for (const auto& [id, p] : parsed) {
    if (!ids.count(id)) throw DataError("generated output for unknown sample " + id);
  }
  std::map<std::string, const judge::JudgeOutcome*> by_id;
  for (const auto& o : outcomes) {
    if (!ids.count(o.sample_id)) throw DataError("judge outcome for unknown sample " + o.sample_id);
    if (!by_id.emplace(o.sample_id, &o).second) throw DataError("duplicate judge outcome for sample " + o.sample_id);
  }
  std::map<std::string, metrics::PerplexityStats> ppl_by_id;
  if (logprobs) {
    for (const auto& rec : *logprobs) {
      if (!ids.count(rec.sample_id)) throw DataError("log-probabilities for unknown sample " + rec.sample_id);
      ppl_by_id[rec.sample_id].merge(metrics::perplexity_stats({rec}));
    }
  }

  EvaluationReport report;
  report.model_label = options.model_label;
  report.overall = MetricBlock(options.bleu_max_n);
  report.provenance.tokenizer_id = options.tokenizer_id;
  report.provenance.seeds = options.seeds;
  report.provenance.config_hash = options.config_hash;

  for (const auto& r : evalset.samples) {
    if (!r.eval_category) throw DataError("eval sample without category: " + r.id);
    auto pit = parsed.find(r.id);
    if (pit == parsed.end()) throw DataError("no generated output for eval sample " + r.id);
    const auto& p = pit->second;
    auto [bit, fresh] = report.per_category.try_emplace(*r.eval_category, options.bleu_max_n);
    MetricBlock& block = bit->second;
    if (fresh && logprobs) block.perplexity_stats.emplace();

    block.format.add(p);

    auto oit = by_id.find(r.id);
    if (oit == by_id.end() || !oit->second->ok()) {
      ++block.excluded_verdicts;
    } else {
      const auto& v = *oit->second->verdict;
      const auto pair = judge::make_set_pair(r.id, generated_ingredients(p), ingredient_names(r.ingredients));
      if (!judge::partition_holds(v, pair)) throw DataError("verdict for " + r.id + " does not partition its inputs");
      block.add_counts(judge::verdict_counts(v));
      ++block.judged;
      ++report.provenance.judge_sources[judge::to_string(v.source)];
    }

    const auto candidate = metrics::tokenize(parser::element_or_empty(p, parser::Element::Procedures), options.tokenizer_id);
    const auto reference = metrics::tokenize(text::join(r.steps, "\n"), options.tokenizer_id);
    block.bleu_stats.add(candidate, reference);
    block.rouge.add(metrics::rouge_l(candidate, reference));

    auto lit = ppl_by_id.find(r.id);
    if (lit != ppl_by_id.end()) block.perplexity_stats->merge(lit->second);
  }

  if (logprobs) report.overall.perplexity_stats.emplace();
  for (auto& [category, block] : report.per_category) {
    block.finalize();
    report.overall.merge(block);
  }
  report.overall.finalize();
  report.provenance.excluded_verdicts = report.overall.excluded_verdicts;
  return report;
}

EvaluationReport merge_reports(const EvaluationReport& a, const EvaluationReport& b) {
  if (a.model_label != b.model_label) throw DataError("cannot merge reports of different models");
  if (a.provenance.tokenizer_id != b.provenance.tokenizer_id) {
    throw DataError("cannot merge reports scored with different tokenizers");
  }
  EvaluationReport out = a;
  out.overall.merge(b.overall);
  out.overall.finalize();
  for (const auto& [category, block] : b.per_category) {
    auto it = out.per_category.find(category);
    if (it == out.per_category.end()) {
      out.per_category.emplace(category, block);
    } else {
      it->second.merge(block);
      it->second.finalize();
    }
  }
  for (const auto& [source, n] : b.provenance.judge_sources) out.provenance.judge_sources[source] += n;
  out.provenance.excluded_verdicts += b.provenance.excluded_verdicts;
  if (a.provenance.config_hash != b.provenance.config_hash) out.provenance.config_hash = "mixed";
  return out;
}

// ---- JSON ------------------------------------------------------------------

namespace {

json format_to_json(const FormatStats& f) {
  return {{"completed", f.completed},
          {"refusal", f.refusal},
          {"error_title", f.error_title},
          {"error_ingredients", f.error_ingredients},
          {"error_procedures", f.error_procedures},
          {"total", f.total}};
}

FormatStats format_from_json(const json& j) {
  FormatStats f;
  f.completed = j.at("completed").get<std::uint64_t>();
  f.refusal = j.at("refusal").get<std::uint64_t>();
  f.error_title = j.at("error_title").get<std::uint64_t>();
  f.error_ingredients = j.at("error_ingredients").get<std::uint64_t>();
  f.error_procedures = j.at("error_procedures").get<std::uint64_t>();
  f.total = j.at("total").get<std::uint64_t>();
  return f;
}

json block_to_json(const MetricBlock& b) {
  json sets = json::object();
  for (const auto& [scope, m] : b.set_metrics) {
    sets[metrics::to_string(scope)] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                                       {"iou", m.iou},             {"tp", m.tp},         {"fp", m.fp},
                                       {"fn", m.fn},               {"degenerate", m.degenerate}};
  }
  json j = {{"format", format_to_json(b.format)},
            {"judged", b.judged},
            {"excluded_verdicts", b.excluded_verdicts},
            {"set_metrics", std::move(sets)},
            {"bleu", b.bleu},
            {"rouge_l", b.rouge_l}};
  if (b.perplexity) j["perplexity"] = *b.perplexity;
  json suff = {{"bleu",
                {{"max_n", b.bleu_stats.max_n},
                 {"matches", b.bleu_stats.matches},
                 {"totals", b.bleu_stats.totals},
                 {"candidate_length", b.bleu_stats.candidate_length},
                 {"reference_length", b.bleu_stats.reference_length}}},
               {"rouge_f", b.rouge.f_values}};
  if (b.perplexity_stats) {
    suff["perplexity"] = {{"logprob_sum", b.perplexity_stats->logprob_sum},
                          {"token_count", b.perplexity_stats->token_count}};
  }
  j["sufficient_statistics"] = std::move(suff);
  return j;
}

MetricBlock block_from_json(const json& j) {
  const auto& suff = j.at("sufficient_statistics");
  const auto& bj = suff.at("bleu");
  MetricBlock b(bj.at("max_n").get<int>());
  b.format = format_from_json(j.at("format"));
  b.judged = j.at("judged").get<std::uint64_t>();
  b.excluded_verdicts = j.at("excluded_verdicts").get<std::uint64_t>();
  for (const auto& [name, m] : j.at("set_metrics").items()) {
    metrics::ScopeMetrics s;
    s.precision = m.at("precision").get<double>();
    s.recall = m.at("recall").get<double>();
    s.f1 = m.at("f1").get<double>();
    s.iou = m.at("iou").get<double>();
    s.tp = m.at("tp").get<std::uint64_t>();
    s.fp = m.at("fp").get<std::uint64_t>();
    s.fn = m.at("fn").get<std::uint64_t>();
    s.degenerate = m.at("degenerate").get<bool>();
    b.set_metrics[metrics::set_scope_from_string(name)] = s;
  }
  b.bleu = j.at("bleu").get<double>();
  b.rouge_l = j.at("rouge_l").get<double>();
  if (j.contains("perplexity")) b.perplexity = j.at("perplexity").get<double>();
  b.bleu_stats.matches = bj.at("matches").get<std::vector<std::uint64_t>>();
  b.bleu_stats.totals = bj.at("totals").get<std::vector<std::uint64_t>>();
  b.bleu_stats.candidate_length = bj.at("candidate_length").get<std::uint64_t>();
  b.bleu_stats.reference_length = bj.at("reference_length").get<std::uint64_t>();
  b.rouge.f_values = suff.at("rouge_f").get<std::vector<double>>();
  if (suff.contains("perplexity")) {
    metrics::PerplexityStats p;
    p.logprob_sum = suff.at("perplexity").at("logprob_sum").get<double>();
    p.token_count = suff.at("perplexity").at("token_count").get<std::uint64_t>();
    b.perplexity_stats = p;
  }
  return b;
}

}  // namespace

json report_to_json(const EvaluationReport& r) {
  json cats = json::object();
  for (const auto& [category, block] : r.per_category) cats[category] = block_to_json(block);
  return {{"model_label", r.model_label},
          {"provenance",
           {{"tokenizer_id", r.provenance.tokenizer_id},
            {"judge_sources", r.provenance.judge_sources},
            {"excluded_verdicts", r.provenance.excluded_verdicts},
            {"seeds", r.provenance.seeds},
            {"config_hash", r.provenance.config_hash}}},
          {"overall", block_to_json(r.overall)},
          {"per_category", std::move(cats)}};
}

EvaluationReport report_from_json(const json& doc) {
  try {
    EvaluationReport r;
    r.model_label = doc.at("model_label").get<std::string>();
    const auto& p = doc.at("provenance");
    r.provenance.tokenizer_id = p.at("tokenizer_id").get<std::string>();
    r.provenance.judge_sources = p.at("judge_sources").get<std::map<std::string, std::uint64_t>>();
    r.provenance.excluded_verdicts = p.at("excluded_verdicts").get<std::uint64_t>();
    r.provenance.seeds = p.at("seeds").get<std::map<std::string, std::uint64_t>>();
    r.provenance.config_hash = p.at("config_hash").get<std::string>();
    r.overall = block_from_json(doc.at("overall"));
    for (const auto& [category, block] : doc.at("per_category").items()) {
      r.per_category.emplace(category, block_from_json(block));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string render_json(const EvaluationReport& report) { return report_to_json(report).dump(2) + "\n"; }

// ---- CSV -------------------------------------------------------------------

namespace {

std::string num(double v) { return json(v).dump(); }

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void csv_row(std::ostringstream& os, const std::string& scope, const MetricBlock& b) {
  using metrics::SetScope;
  os << csv_field(scope) << ',' << b.format.total << ',' << b.format.completed << ',' << b.format.refusal << ','
     << b.format.error_title << ',' << b.format.error_ingredients << ',' << b.format.error_procedures << ','
     << b.judged << ',' << b.excluded_verdicts;
  for (auto s : {SetScope::All, SetScope::NonSeasoning, SetScope::Seasoning}) {
    const auto& m = b.set_metrics.at(s);
    os << ',' << num(m.f1) << ',' << num(m.precision) << ',' << num(m.recall) << ',' << num(m.iou);
  }
  os << ',' << num(b.bleu) << ',' << num(b.rouge_l) << ',' << (b.perplexity ? num(*b.perplexity) : "") << '\n';
}

}  // namespace

std::string render_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os << "category,total,completed,refusal,error_title,error_ingredients,error_procedures,judged,excluded_verdicts";
  for (const char* s : {"all", "non_seasoning", "seasoning"}) {
    os << ",f1_" << s << ",precision_" << s << ",recall_" << s << ",iou_" << s;
  }
  os << ",bleu,rouge_l,perplexity\n";
  csv_row(os, "overall", r.overall);
  for (const auto& [category, block] : r.per_category) csv_row(os, category, block);
  return os.str();
}

// ---- Markdown --------------------------------------------------------------

namespace {

std::string scoped(const MetricBlock& b, double metrics::ScopeMetrics::*field) {
  using metrics::SetScope;
  return fixed3(b.set_metrics.at(SetScope::All).*field) + " (" +
         fixed3(b.set_metrics.at(SetScope::NonSeasoning).*field) + "/" +
         fixed3(b.set_metrics.at(SetScope::Seasoning).*field) + ")";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

void format_table(std::ostringstream& os, const std::vector<const EvaluationReport*>& reports) {
  os << "| Model name | Perplexity | Completed | Refusal | Error title | Error ingredients | Error procedures |\n"
     << "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto* r : reports) {
    const auto& f = r->overall.format;
    os << "| " << md_escape(r->model_label) << " | " << (r->overall.perplexity ? fixed3(*r->overall.perplexity) : "-")
       << " | " << f.completed << " | " << f.refusal << " | " << f.error_title << " | " << f.error_ingredients << " | "
       << f.error_procedures << " |\n";
  }
}

void score_table(std::ostringstream& os, const std::vector<const EvaluationReport*>& reports) {
  os << "| Model name | micro F1 | micro Precision | micro Recall | BLEU | ROUGE-L |\n"
     << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto* r : reports) {
    const auto& b = r->overall;
    os << "| " << md_escape(r->model_label) << " | " << scoped(b, &metrics::ScopeMetrics::f1) << " | "
       << scoped(b, &metrics::ScopeMetrics::precision) << " | " << scoped(b, &metrics::ScopeMetrics::recall) << " | "
       << fixed3(b.bleu) << " | " << fixed3(b.rouge_l) << " |\n";
  }
}

}  // namespace

std::string render_markdown(const EvaluationReport& r) {
  std::ostringstream os;
  os << "# Evaluation report: " << md_escape(r.model_label) << "\n\n";
  os << "## Output format\n\n";
  format_table(os, {&r});
  os << "\n## Ingredients and procedures\n\n"
     << "Ingredient scores are overall (non-seasoning/seasoning).\n\n";
  score_table(os, {&r});
  os << "\n## Per category\n\n"
     << "| Category | Samples | Completed | Refusal | Judged | Excluded verdicts | micro F1 | micro Precision | micro "
        "Recall | BLEU | ROUGE-L |\n"
     << "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& [category, b] : r.per_category) {
    const auto& all = b.set_metrics.at(metrics::SetScope::All);
    os << "| " << md_escape(category) << " | " << b.format.total << " | " << b.format.completed << " | "
       << b.format.refusal << " | " << b.judged << " | " << b.excluded_verdicts << " | " << fixed3(all.f1) << " | "
       << fixed3(all.precision) << " | " << fixed3(all.recall) << " | " << fixed3(b.bleu) << " | "
       << fixed3(b.rouge_l) << " |\n";
  }
  os << "\n## Provenance\n\n";
  os << "- tokenizer: " << r.provenance.tokenizer_id << "\n";
  os << "- judge sources:";
  if (r.provenance.judge_sources.empty()) os << " none";
  for (const auto& [source, n] : r.provenance.judge_sources) os << ' ' << source << '=' << n;
  os << "\n- excluded verdicts: " << r.provenance.excluded_verdicts << "\n";
  os << "- seeds:";
  if (r.provenance.seeds.empty()) os << " none";
  for (const auto& [name, seed] : r.provenance.seeds) os << ' ' << name << '=' << seed;
  os << "\n- config hash: " << (r.provenance.config_hash.empty() ? "-" : r.provenance.config_hash) << "\n";
  if (r.overall.set_metrics.at(metrics::SetScope::All).degenerate) {
    os << "\nSet metrics are degenerate: at least one denominator is zero.\n";
  }
  return os.str();
}

std::string render_comparison_markdown(const std::vector<EvaluationReport>& reports) {
  std::vector<const EvaluationReport*> ptrs;
  for (const auto& r : reports) ptrs.push_back(&r);
  std::ostringstream os;
  os << "## Output format\n\n";
  format_table(os, ptrs);
  os << "\n## Ingredients and procedures\n\n";
  score_table(os, ptrs);
  return os.str();
}

Format format_from_string(const std::string& name) {
  if (name == "json") return Format::Json;
  if (name == "csv") return Format::Csv;
  if (name == "markdown" || name == "md") return Format::Markdown;
  throw ConfigError("unknown report format: " + name);
}

void emit(const EvaluationReport& report, Format format, const std::filesystem::path& path) {
  switch (format) {
    case Format::Json: write_text_file(path, render_json(report)); break;
    case Format::Csv: write_text_file(path, render_csv(report)); break;
    case Format::Markdown: write_text_file(path, render_markdown(report)); break;
  }
}

EvaluationReport load_report(const std::filesystem::path& path) {
  const json doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) throw DataError("report is not valid JSON: " + path.string());
  return report_from_json(doc);
}

}  // namespace recipebench::report
