// Structured values cross the boundary as JSON text; recipebench/__init__.py
// turns them into Python objects.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "recipebench/cli.hpp"
#include "recipebench/dataset.hpp"
#include "recipebench/error.hpp"
#include "recipebench/judge.hpp"
#include "recipebench/metrics.hpp"
#include "recipebench/parser.hpp"
#include "recipebench/text.hpp"
#include "recipebench/traindata.hpp"

namespace py = pybind11;
using namespace recipebench;

namespace {

judge::SeasoningLexicon make_lexicon(const std::vector<std::string>& words,
                                     const std::map<std::string, std::vector<std::string>>& synonyms) {
  return judge::SeasoningLexicon(words, judge::ItemNormalizer(synonyms));
}

std::vector<metrics::SequencePair> sequence_pairs(const std::vector<std::string>& candidates,
                                                  const std::vector<std::string>& references,
                                                  const std::string& tokenizer_id) {
  if (candidates.size() != references.size()) throw DataError("candidates and references differ in length");
  std::vector<metrics::SequencePair> pairs;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    pairs.emplace_back(metrics::tokenize(candidates[i], tokenizer_id), metrics::tokenize(references[i], tokenizer_id));
  }
  return pairs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "recipebench native core";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<VerdictError>(m, "VerdictError", base.ptr());
  py::register_exception<NetworkError>(m, "NetworkError", base.ptr());

  m.def("nfkc", &text::nfkc);
  m.def("tokenize",
        [](const std::string& s, const std::string& tokenizer_id) { return metrics::tokenize(s, tokenizer_id).tokens; },
        py::arg("text"), py::arg("tokenizer_id") = metrics::kFallbackTokenizer);

  m.def(
      "corpus_bleu",
      [](const std::vector<std::string>& candidates, const std::vector<std::string>& references, int max_n,
         const std::string& tokenizer_id) {
        return metrics::corpus_bleu(sequence_pairs(candidates, references, tokenizer_id), max_n);
      },
      py::arg("candidates"), py::arg("references"), py::arg("max_n") = 4,
      py::arg("tokenizer_id") = metrics::kFallbackTokenizer);
  m.def(
      "rouge_l",
      [](const std::string& candidate, const std::string& reference, const std::string& tokenizer_id) {
        const auto s = metrics::rouge_l(metrics::tokenize(candidate, tokenizer_id), metrics::tokenize(reference, tokenizer_id));
        return py::make_tuple(s.precision, s.recall, s.f);
      },
      py::arg("candidate"), py::arg("reference"), py::arg("tokenizer_id") = metrics::kFallbackTokenizer);
  m.def("lcs_length", [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return metrics::lcs_length(a, b);
  });
  m.def("corpus_perplexity", [](const std::vector<std::vector<double>>& logprobs) {
    std::vector<metrics::LogProbRecord> records;
    for (std::size_t i = 0; i < logprobs.size(); ++i) records.push_back({std::to_string(i), logprobs[i]});
    return metrics::corpus_perplexity(records);
  });
  m.def("micro_set_metrics_json", [](const std::vector<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>>& counts) {
    std::vector<metrics::SetCounts> c;
    for (const auto& [tp, fp, fn] : counts) c.push_back(metrics::SetCounts::of(tp, fp, fn));
    const auto m = metrics::micro_set_metrics(c).at(metrics::SetScope::All);
    return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"iou", m.iou}, {"degenerate", m.degenerate}}.dump();
  });

  m.def(
      "parse_generated_json",
      [](const std::string& text, const std::string& templates_json) {
        const auto templates = templates_json.empty() ? TemplateConfig{} : templates_from_json(json::parse(templates_json));
        return parser::parsed_to_json(parser::parse_generated(text, templates), "").dump();
      },
      py::arg("text"), py::arg("templates_json") = "");
  m.def(
      "detect_repetition_json",
      [](const std::string& text, std::size_t min_repeats, std::size_t window) {
        const auto d = parser::detect_repetition(text, min_repeats, window);
        return json{{"loop_detected", d.loop_detected}, {"period_tokens", d.period_tokens}, {"repeats", d.repeats},
                    {"loop_start", d.loop_start}, {"salvage_boundary", d.salvage_boundary}}
            .dump();
      },
      py::arg("text"), py::arg("min_repeats") = 3, py::arg("window_tokens") = 64);
  m.def("render_recipe_text", [](const std::string& recipe_json) {
    dataset::Recipe r;
    if (auto reason = dataset::recipe_from_json(json::parse(recipe_json), r)) throw DataError("invalid recipe: " + *reason);
    return traindata::render_recipe_text(r);
  });
  m.def("split_by_category_json", [](const std::string& recipes_jsonl_text, double fraction, std::uint64_t seed) {
    dataset::RecipeCorpus corpus;
    for (const auto& line : text::split_lines(recipes_jsonl_text)) {
      if (text::trim(line).empty()) continue;
      dataset::Recipe r;
      if (auto reason = dataset::recipe_from_json(json::parse(line), r)) throw DataError("invalid recipe: " + *reason);
      corpus.recipes.push_back(std::move(r));
    }
    const auto split = dataset::split_by_category(corpus, fraction, seed);
    json out = {{"train", json::array()}, {"test", json::array()}};
    for (const auto& r : split.train.recipes) out["train"].push_back(r.id);
    for (const auto& r : split.test.recipes) out["test"].push_back(r.id);
    return out.dump();
  });

  m.def(
      "judge_offline_json",
      [](const std::vector<std::string>& generated, const std::vector<std::string>& truth,
         const std::vector<std::string>& lexicon, const std::map<std::string, std::vector<std::string>>& synonyms) {
        const auto lex = make_lexicon(lexicon, synonyms);
        const auto pair = judge::make_set_pair("", generated, truth);
        return judge::verdict_to_json(judge::judge_offline(pair, lex.normalizer(), lex)).dump();
      },
      py::arg("generated"), py::arg("truth"), py::arg("lexicon") = std::vector<std::string>{},
      py::arg("synonyms") = std::map<std::string, std::vector<std::string>>{});
  m.def(
      "build_judge_prompt",
      [](const std::vector<std::string>& generated, const std::vector<std::string>& truth, const std::string& tmpl) {
        return judge::build_judge_prompt(judge::make_set_pair("", generated, truth),
                                         tmpl.empty() ? judge::default_prompt_template() : tmpl);
      },
      py::arg("generated"), py::arg("truth"), py::arg("template") = "");
  m.def(
      "parse_verdict_json",
      [](const std::string& response, const std::vector<std::string>& generated, const std::vector<std::string>& truth,
         const std::vector<std::string>& lexicon) {
        const auto lex = make_lexicon(lexicon, {});
        return judge::verdict_to_json(judge::parse_verdict(response, judge::make_set_pair("", generated, truth), lex)).dump();
      },
      py::arg("response"), py::arg("generated"), py::arg("truth"), py::arg("lexicon") = std::vector<std::string>{});

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"recipebench"};
    for (const auto& a : args) argv.push_back(a.c_str());
    py::gil_scoped_release release;
    return cli::run_cli(static_cast<int>(argv.size()), argv.data());
  });
}
