#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "recipebench/judge.hpp"

namespace recipebench::judge {

struct RetryPolicy {
  int max_attempts = 5;
  int initial_backoff_ms = 500;
  double backoff_multiplier = 2.0;
  int max_backoff_ms = 8000;

  // Delay before attempt `attempt` (2-based; the first attempt has none).
  int backoff_ms(int attempt) const;
};

struct JudgeConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-2024-05-13";
  double temperature = 0.0;
  std::size_t max_parallel = 8;
  double requests_per_second = 0.0;  // 0 = unlimited
  RetryPolicy retry;
  std::string cache_dir;  // empty disables the cache
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 60;

  // Throws ConfigError; in particular temperature must be exactly 0.
  void validate() const;
};

json judge_config_to_json(const JudgeConfig& config);
JudgeConfig judge_config_from_json(const json& doc);

struct HttpResult {
  int status = 0;  // 0 = transport failure
  std::string body;
  std::string error;
};

// Sends one request body to the chat-completions endpoint.
using ChatTransport = std::function<HttpResult(const std::string& body)>;

ChatTransport http_transport(const JudgeConfig& config, std::string api_key);

std::string chat_request_body(const JudgeConfig& config, const std::string& prompt);

// Text of the first choice, or nullopt when the envelope is malformed.
std::optional<std::string> chat_response_content(const std::string& body);

// Content-addressed store of raw judge responses, keyed by
// sha256(prompt + "\n" + model). Reads are lock-free; writes are serialized
// and atomic (temp file + rename).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key(const std::string& prompt, const std::string& model);
  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& model, const std::string& response);

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

struct RemoteJudgeStats {
  std::size_t unique_prompts = 0;
  std::size_t requests = 0;  // HTTP attempts, retries included
  std::size_t retries = 0;
  std::size_t cache_hits = 0;
  std::size_t excluded = 0;
};

// One outcome per pair, in input order. Identical prompts are sent once.
// Malformed or unrepairable responses become exclusions and are not cached.
// Throws AuthError on 401/403.
std::vector<JudgeOutcome> judge_remote(const std::vector<IngredientSetPair>& pairs, const JudgeConfig& config,
                                       const std::string& prompt_template, const SeasoningLexicon& lexicon,
                                       const ChatTransport& transport, RemoteJudgeStats* stats = nullptr);

// Reads the credential from config.api_key_env and talks HTTP(S). Throws
// ConfigError before any request when the variable is unset.
std::vector<JudgeOutcome> judge_remote(const std::vector<IngredientSetPair>& pairs, const JudgeConfig& config,
                                       const std::string& prompt_template, const SeasoningLexicon& lexicon,
                                       RemoteJudgeStats* stats = nullptr);

}  // namespace recipebench::judge
