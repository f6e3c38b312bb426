#include "recipebench/judge_client.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include <httplib.h>

#include "recipebench/error.hpp"
#include "recipebench/hash.hpp"

namespace recipebench::judge {

int RetryPolicy::backoff_ms(int attempt) const {
  if (attempt <= 1) return 0;
  const double d = initial_backoff_ms * std::pow(backoff_multiplier, attempt - 2);
  return static_cast<int>(std::min<double>(d, max_backoff_ms));
}

void JudgeConfig::validate() const {
  if (temperature != 0.0) throw ConfigError("judge temperature must be 0.0");
  if (max_parallel == 0) throw ConfigError("judge max_parallel must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError("judge retry.max_attempts must be >= 1");
  if (retry.initial_backoff_ms < 0 || retry.max_backoff_ms < 0 || retry.backoff_multiplier < 1.0) {
    throw ConfigError("judge retry schedule is invalid");
  }
  if (requests_per_second < 0.0) throw ConfigError("judge requests_per_second must be >= 0");
  if (model.empty()) throw ConfigError("judge model is empty");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
    throw ConfigError("judge endpoint must be an http(s) URL: " + endpoint);
  }
  if (api_key_env.empty()) throw ConfigError("judge api_key_env is empty");
}

json judge_config_to_json(const JudgeConfig& c) {
  return {{"endpoint", c.endpoint},
          {"model", c.model},
          {"temperature", c.temperature},
          {"max_parallel", c.max_parallel},
          {"requests_per_second", c.requests_per_second},
          {"retry",
           {{"max_attempts", c.retry.max_attempts},
            {"initial_backoff_ms", c.retry.initial_backoff_ms},
            {"backoff_multiplier", c.retry.backoff_multiplier},
            {"max_backoff_ms", c.retry.max_backoff_ms}}},
          {"cache_dir", c.cache_dir},
          {"api_key_env", c.api_key_env},
          {"timeout_seconds", c.timeout_seconds}};
}

JudgeConfig judge_config_from_json(const json& doc) {
  JudgeConfig c;
  try {
    c.endpoint = doc.value("endpoint", c.endpoint);
    c.model = doc.value("model", c.model);
    c.temperature = doc.value("temperature", c.temperature);
    c.max_parallel = doc.value("max_parallel", c.max_parallel);
    c.requests_per_second = doc.value("requests_per_second", c.requests_per_second);
    if (doc.contains("retry")) {
      const auto& r = doc.at("retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      c.retry.initial_backoff_ms = r.value("initial_backoff_ms", c.retry.initial_backoff_ms);
      c.retry.backoff_multiplier = r.value("backoff_multiplier", c.retry.backoff_multiplier);
      c.retry.max_backoff_ms = r.value("max_backoff_ms", c.retry.max_backoff_ms);
    }
    c.cache_dir = doc.value("cache_dir", c.cache_dir);
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.timeout_seconds = doc.value("timeout_seconds", c.timeout_seconds);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed judge config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- transport -------------------------------------------------------------

std::string chat_request_body(const JudgeConfig& config, const std::string& prompt) {
  json body = {{"model", config.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", config.temperature}};
  return body.dump();
}

std::optional<std::string> chat_response_content(const std::string& body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message")) return std::nullopt;
  const auto& message = first.at("message");
  if (!message.is_object() || !message.contains("content") || !message.at("content").is_string()) return std::nullopt;
  return message.at("content").get<std::string>();
}

ChatTransport http_transport(const JudgeConfig& config, std::string api_key) {
  const auto scheme_end = config.endpoint.find("://");
  const auto path_start = config.endpoint.find('/', scheme_end + 3);
  const std::string origin = config.endpoint.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : config.endpoint.substr(path_start);
  const int timeout = config.timeout_seconds;
  return [origin, path, timeout, key = std::move(api_key)](const std::string& body) {
    httplib::Client client(origin);
    client.set_connection_timeout(timeout, 0);
    client.set_read_timeout(timeout, 0);
    client.set_write_timeout(timeout, 0);
    httplib::Headers headers = {{"Authorization", "Bearer " + key}};
    HttpResult out;
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  };
}

// ---- cache -----------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::string ResponseCache::key(const std::string& prompt, const std::string& model) {
  return sha256_hex(prompt + "\n" + model);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const { return dir_ / (key + ".json"); }

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  const auto p = path_for(key);
  if (!std::filesystem::exists(p)) return std::nullopt;
  const json doc = json::parse(read_text_file(p), nullptr, false);
  if (doc.is_discarded() || !doc.contains("response") || !doc.at("response").is_string()) return std::nullopt;
  return doc.at("response").get<std::string>();
}

void ResponseCache::put(const std::string& key, const std::string& model, const std::string& response) {
  std::lock_guard<std::mutex> lock(write_mutex_);
  write_text_file(path_for(key), json{{"model", model}, {"response", response}}.dump(2) + "\n");
}

// ---- remote judging --------------------------------------------------------

namespace {

class RateLimiter {
 public:
  explicit RateLimiter(double per_second) : per_second_(per_second) {}

  void acquire() {
    if (per_second_ <= 0.0) return;
    using clock = std::chrono::steady_clock;
    const auto interval = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / per_second_));
    clock::time_point slot;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto now = clock::now();
      if (next_ < now) next_ = now;
      slot = next_;
      next_ += interval;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  double per_second_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

struct Response {
  std::optional<std::string> content;
  std::string error;
  int attempts = 0;
  bool from_cache = false;
};

bool retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

}  // namespace

std::vector<JudgeOutcome> judge_remote(const std::vector<IngredientSetPair>& pairs, const JudgeConfig& config,
                                       const std::string& prompt_template, const SeasoningLexicon& lexicon,
                                       const ChatTransport& transport, RemoteJudgeStats* stats) {
  config.validate();

  std::vector<std::string> prompts;
  std::map<std::string, std::size_t> prompt_index;
  std::vector<std::size_t> pair_prompt(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::string p = build_judge_prompt(pairs[i], prompt_template);
    auto [it, inserted] = prompt_index.emplace(p, prompts.size());
    if (inserted) prompts.push_back(std::move(p));
    pair_prompt[i] = it->second;
  }

  std::optional<ResponseCache> cache;
  if (!config.cache_dir.empty()) cache.emplace(config.cache_dir);

  std::vector<Response> responses(prompts.size());
  RateLimiter limiter(config.requests_per_second);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> requests{0}, retries{0}, hits{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  const auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= prompts.size() || abort.load()) return;
      Response& r = responses[idx];
      const std::string key = ResponseCache::key(prompts[idx], config.model);
      if (cache) {
        if (auto hit = cache->get(key)) {
          r.content = std::move(*hit);
          r.from_cache = true;
          ++hits;
          continue;
        }
      }
      const std::string body = chat_request_body(config, prompts[idx]);
      for (int attempt = 1; attempt <= config.retry.max_attempts; ++attempt) {
        if (abort.load()) return;
        if (attempt > 1) {
          ++retries;
          std::this_thread::sleep_for(std::chrono::milliseconds(config.retry.backoff_ms(attempt)));
        }
        limiter.acquire();
        ++requests;
        r.attempts = attempt;
        const HttpResult res = transport(body);
        if (res.status == 401 || res.status == 403) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!fatal) fatal = std::make_exception_ptr(AuthError("judge endpoint rejected the credential (HTTP " + std::to_string(res.status) + ")"));
          abort = true;
          return;
        }
        if (res.status == 200) {
          if (auto content = chat_response_content(res.body)) {
            r.content = std::move(content);
            r.error.clear();
            break;
          }
          r.error = "malformed response envelope";
          continue;
        }
        r.error = res.status == 0 ? "transport error: " + res.error : "HTTP " + std::to_string(res.status);
        if (!retryable(res.status)) break;
      }
      if (!r.content && r.error.empty()) r.error = "no response";
    }
  };

  const std::size_t n_workers = std::min(config.max_parallel, std::max<std::size_t>(prompts.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (fatal) std::rethrow_exception(fatal);

  std::vector<JudgeOutcome> outcomes(pairs.size());
  std::vector<bool> cacheable(prompts.size(), true);
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Response& r = responses[pair_prompt[i]];
    JudgeOutcome& o = outcomes[i];
    o.sample_id = pairs[i].sample_id;
    o.attempts = r.attempts;
    if (!r.content) {
      o.error = r.error.empty() ? "retries exhausted" : "retries exhausted: " + r.error;
      ++excluded;
      continue;
    }
    try {
      o.verdict = parse_verdict(*r.content, pairs[i], lexicon, r.from_cache ? VerdictSource::Cache : VerdictSource::Remote);
    } catch (const VerdictError& e) {
      o.error = e.what();
      o.raw_response = e.raw_response;
      cacheable[pair_prompt[i]] = false;
      ++excluded;
    }
  }
  if (cache) {
    for (std::size_t k = 0; k < prompts.size(); ++k) {
      const Response& r = responses[k];
      if (r.content && !r.from_cache && cacheable[k]) cache->put(ResponseCache::key(prompts[k], config.model), config.model, *r.content);
    }
  }
  if (stats) {
    stats->unique_prompts = prompts.size();
    stats->requests = requests;
    stats->retries = retries;
    stats->cache_hits = hits;
    stats->excluded = excluded;
  }
  return outcomes;
}

std::vector<JudgeOutcome> judge_remote(const std::vector<IngredientSetPair>& pairs, const JudgeConfig& config,
                                       const std::string& prompt_template, const SeasoningLexicon& lexicon,
                                       RemoteJudgeStats* stats) {
  config.validate();
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("remote judge needs a credential in environment variable " + config.api_key_env);
  }
  return judge_remote(pairs, config, prompt_template, lexicon, http_transport(config, key), stats);
}

}  // namespace recipebench::judge
