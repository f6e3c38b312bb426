#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "recipebench/error.hpp"
#include "recipebench/judge_client.hpp"
#include "fake_judge.hpp"
#include "synthetic.hpp"
#include "synthetic_pairs.hpp"

using namespace recipebench;
using namespace recipebench::judge;

namespace {

SeasoningLexicon test_lexicon() {
  return SeasoningLexicon(rbtest::canonical_seasonings(), ItemNormalizer(rbtest::canonical_synonyms()));
}

JudgeConfig fast_config() {
  JudgeConfig c;
  c.max_parallel = 4;
  c.retry.initial_backoff_ms = 1;
  c.retry.max_backoff_ms = 2;
  c.retry.max_attempts = 4;
  return c;
}

std::vector<IngredientSetPair> sample_pairs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<IngredientSetPair> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rbtest::make_labelled_pair(rng, "s" + std::to_string(i)).pair);
  return out;
}

ChatTransport honest_transport(const SeasoningLexicon& lex, std::atomic<int>* calls = nullptr) {
  return [&lex, calls](const std::string& body) {
    if (calls) ++*calls;
    return HttpResult{200, rbtest::chat_envelope(rbtest::honest_answer(rbtest::prompt_from_request(body), lex)), ""};
  };
}

}  // namespace

TEST(RetryPolicy, ExponentialScheduleIsCapped) {
  const RetryPolicy p;
  EXPECT_EQ(p.backoff_ms(1), 0);
  EXPECT_EQ(p.backoff_ms(2), 500);
  EXPECT_EQ(p.backoff_ms(3), 1000);
  EXPECT_EQ(p.backoff_ms(5), 4000);
  EXPECT_EQ(p.backoff_ms(6), 8000);
  EXPECT_EQ(p.backoff_ms(9), 8000);
}

TEST(JudgeConfig, ValidationAndJson) {
  JudgeConfig c;
  EXPECT_NO_THROW(c.validate());
  c.temperature = 0.7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = JudgeConfig{};
  c.endpoint = "ftp://x";
  EXPECT_THROW(c.validate(), ConfigError);
  c = fast_config();
  c.cache_dir = "/tmp/x";
  const auto back = judge_config_from_json(judge_config_to_json(c));
  EXPECT_EQ(judge_config_to_json(back), judge_config_to_json(c));
  EXPECT_THROW(judge_config_from_json(json{{"temperature", 1.0}}), ConfigError);
  EXPECT_THROW(judge_config_from_json(json{{"max_parallel", "many"}}), ConfigError);
}

TEST(ChatProtocol, RequestAndResponseShapes) {
  const auto body = json::parse(chat_request_body(JudgeConfig{}, "hello"));
  EXPECT_EQ(body["model"], "gpt-4o-2024-05-13");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"][0]["content"], "hello");
  EXPECT_EQ(chat_response_content(rbtest::chat_envelope("x")), "x");
  EXPECT_FALSE(chat_response_content("not json"));
  EXPECT_FALSE(chat_response_content(R"({"choices": []})"));
  EXPECT_FALSE(chat_response_content(R"({"choices": [{"message": {"content": null}}]})"));
}

TEST(Remote, HonestJudgeMatchesOffline) {
  const auto lex = test_lexicon();
  const auto pairs = sample_pairs(60, 1);
  RemoteJudgeStats stats;
  const auto outcomes = judge_remote(pairs, fast_config(), rbtest::kMarkerTemplate, lex, honest_transport(lex), &stats);
  ASSERT_EQ(outcomes.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ASSERT_TRUE(outcomes[i].ok()) << outcomes[i].error;
    const auto& v = *outcomes[i].verdict;
    const auto offline = judge_offline(pairs[i], lex.normalizer(), lex);
    EXPECT_EQ(v.sample_id, pairs[i].sample_id);
    EXPECT_EQ(v.matched, offline.matched);
    EXPECT_EQ(v.generated_only, offline.generated_only);
    EXPECT_EQ(v.truth_only, offline.truth_only);
    EXPECT_EQ(v.source, VerdictSource::Remote);
    EXPECT_EQ(outcomes[i].attempts, 1);
  }
  EXPECT_EQ(stats.requests, stats.unique_prompts);
  EXPECT_EQ(stats.excluded, 0u);
}

TEST(Remote, IdenticalPromptsAreSentOnce) {
  const auto lex = test_lexicon();
  std::vector<IngredientSetPair> pairs = {make_set_pair("a", {"塩"}, {"しお"}), make_set_pair("b", {"塩"}, {"しお"}),
                                          make_set_pair("c", {"卵"}, {})};
  std::atomic<int> calls{0};
  RemoteJudgeStats stats;
  const auto outcomes = judge_remote(pairs, fast_config(), rbtest::kMarkerTemplate, lex, honest_transport(lex, &calls), &stats);
  EXPECT_EQ(calls.load(), 2);
  EXPECT_EQ(stats.unique_prompts, 2u);
  EXPECT_EQ(outcomes[1].verdict->sample_id, "b");
}

TEST(Remote, RetriesTransientFailures) {
  const auto lex = test_lexicon();
  std::mutex m;
  std::map<std::string, int> seen;
  const ChatTransport flaky = [&](const std::string& body) {
    int n;
    {
      std::lock_guard<std::mutex> lock(m);
      n = ++seen[body];
    }
    if (n == 1) return HttpResult{503, "", ""};
    if (n == 2) return HttpResult{0, "", "connection reset"};
    if (n == 3) return HttpResult{200, "<html>gateway</html>", ""};
    return HttpResult{200, rbtest::chat_envelope(rbtest::honest_answer(rbtest::prompt_from_request(body), lex)), ""};
  };
  RemoteJudgeStats stats;
  const auto outcomes = judge_remote(sample_pairs(10, 2), fast_config(), rbtest::kMarkerTemplate, lex, flaky, &stats);
  for (const auto& o : outcomes) {
    EXPECT_TRUE(o.ok());
    EXPECT_EQ(o.attempts, 4);
  }
  EXPECT_EQ(stats.retries, 3 * stats.unique_prompts);
}

TEST(Remote, ExhaustedAndPermanentFailuresAreExcluded) {
  const auto lex = test_lexicon();
  const auto pairs = sample_pairs(5, 3);
  auto outcomes = judge_remote(pairs, fast_config(), rbtest::kMarkerTemplate, lex,
                               [](const std::string&) { return HttpResult{429, "", ""}; });
  for (const auto& o : outcomes) {
    EXPECT_FALSE(o.ok());
    EXPECT_EQ(o.attempts, 4);
    EXPECT_NE(o.error.find("HTTP 429"), std::string::npos);
  }
  outcomes = judge_remote(pairs, fast_config(), rbtest::kMarkerTemplate, lex,
                          [](const std::string&) { return HttpResult{400, "bad request", ""}; });
  for (const auto& o : outcomes) {
    EXPECT_FALSE(o.ok());
    EXPECT_EQ(o.attempts, 1);
  }
}

TEST(Remote, AuthFailureAborts) {
  const auto lex = test_lexicon();
  EXPECT_THROW(judge_remote(sample_pairs(20, 4), fast_config(), rbtest::kMarkerTemplate, lex,
                            [](const std::string&) { return HttpResult{401, "", ""}; }),
               AuthError);
}

TEST(Remote, MalformedVerdictsAreExcludedAndNotCached) {
  const auto lex = test_lexicon();
  const auto dir = rbtest::temp_dir("judge_cache_bad");
  auto config = fast_config();
  config.cache_dir = (dir / "cache").string();
  const std::vector<IngredientSetPair> pairs = {make_set_pair("a", {"卵"}, {"牛乳"})};
  const auto outcomes = judge_remote(pairs, config, rbtest::kMarkerTemplate, lex, [](const std::string&) {
    return HttpResult{200, rbtest::chat_envelope(R"({"common": [{"generated": "トリュフ", "truth": "牛乳"}]})"), ""};
  });
  ASSERT_FALSE(outcomes[0].ok());
  EXPECT_NE(outcomes[0].raw_response.find("トリュフ"), std::string::npos);
  EXPECT_TRUE(std::filesystem::is_empty(dir / "cache"));
}

TEST(Remote, CacheServesRepeatRuns) {
  const auto lex = test_lexicon();
  const auto dir = rbtest::temp_dir("judge_cache");
  auto config = fast_config();
  config.cache_dir = (dir / "cache").string();
  const auto pairs = sample_pairs(15, 5);
  RemoteJudgeStats first, second;
  const auto a = judge_remote(pairs, config, rbtest::kMarkerTemplate, lex, honest_transport(lex), &first);
  std::atomic<int> calls{0};
  const auto b = judge_remote(pairs, config, rbtest::kMarkerTemplate, lex, honest_transport(lex, &calls), &second);
  EXPECT_EQ(calls.load(), 0);
  EXPECT_EQ(second.cache_hits, first.unique_prompts);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(b[i].verdict->source, VerdictSource::Cache);
    EXPECT_EQ(b[i].verdict->matched, a[i].verdict->matched);
  }
  // A different model is a different key.
  config.model = "other-model";
  judge_remote(pairs, config, rbtest::kMarkerTemplate, lex, honest_transport(lex, &calls));
  EXPECT_GT(calls.load(), 0);
}

TEST(Remote, MissingCredentialFailsBeforeAnyRequest) {
  auto config = fast_config();
  config.api_key_env = "RECIPEBENCH_TEST_UNSET_KEY";
  ::unsetenv(config.api_key_env.c_str());
  EXPECT_THROW(judge_remote(sample_pairs(2, 6), config, rbtest::kMarkerTemplate, test_lexicon()), ConfigError);
}

TEST(HttpTransport, TalksToLocalServer) {
  httplib::Server server;
  server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer secret") {
      res.status = 401;
      return;
    }
    res.set_content(rbtest::chat_envelope("pong"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  JudgeConfig config = fast_config();
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  const auto ok = http_transport(config, "secret")(chat_request_body(config, "ping"));
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(chat_response_content(ok.body), "pong");
  EXPECT_EQ(http_transport(config, "wrong")("{}").status, 401);

  server.stop();
  thread.join();
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  EXPECT_EQ(http_transport(config, "secret")("{}").status, 0);
}
