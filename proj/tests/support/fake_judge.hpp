#pragma once

// A stand-in for the chat-completions judge. Prompts are built from a marker
// template so the fake can read both lists back; answers are the offline
// verdict written in the judge's response schema.

#include <string>
#include <utility>
#include <vector>

#include "recipebench/jsonl.hpp"
#include "recipebench/judge.hpp"
#include "recipebench/text.hpp"

namespace rbtest {

inline const std::string kMarkerTemplate = "<<S1>>\n{generated}\n<<S2>>\n{truth}\n<<END>>\n{schema}";

inline std::pair<std::vector<std::string>, std::vector<std::string>> lists_from_prompt(const std::string& prompt) {
  std::vector<std::string> gen, truth;
  std::vector<std::string>* current = nullptr;
  for (const auto& line : recipebench::text::split_lines(prompt)) {
    if (line == "<<S1>>") current = &gen;
    else if (line == "<<S2>>") current = &truth;
    else if (line == "<<END>>") break;
    else if (current && line.rfind("- ", 0) == 0) current->push_back(line.substr(2));
  }
  return {gen, truth};
}

inline std::string prompt_from_request(const std::string& body) {
  return recipebench::json::parse(body).at("messages").at(0).at("content").get<std::string>();
}

inline std::string verdict_response(const recipebench::judge::JudgeVerdict& v) {
  using recipebench::json;
  json doc = {{"common", json::array()}, {"only_generated", json::array()}, {"only_truth", json::array()}};
  for (const auto& m : v.matched) doc["common"].push_back({{"generated", m.generated}, {"truth", m.truth}, {"seasoning", m.seasoning}});
  for (const auto& u : v.generated_only) doc["only_generated"].push_back({{"item", u.item}, {"seasoning", u.seasoning}});
  for (const auto& u : v.truth_only) doc["only_truth"].push_back({{"item", u.item}, {"seasoning", u.seasoning}});
  return doc.dump();
}

inline std::string honest_answer(const std::string& prompt, const recipebench::judge::SeasoningLexicon& lexicon) {
  const auto [gen, truth] = lists_from_prompt(prompt);
  const auto pair = recipebench::judge::make_set_pair("", gen, truth);
  return verdict_response(recipebench::judge::judge_offline(pair, lexicon.normalizer(), lexicon));
}

inline std::string chat_envelope(const std::string& content) {
  using recipebench::json;
  return json{{"id", "chatcmpl-test"},
              {"object", "chat.completion"},
              {"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", "stop"}}})}}
      .dump();
}

}  // namespace rbtest
