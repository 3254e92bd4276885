#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ctxlab/model.hpp"

namespace ctxlab {

struct HttpClientOptions {
  std::string base_url; // scheme://host[:port][/prefix], e.g. https://api.openai.com/v1
  std::string api_key;
  int max_retries = 3;          // retries after the first attempt
  int connect_timeout_s = 10;
  int read_timeout_s = 120;
  int backoff_base_ms = 250;    // doubled per retry; Retry-After wins when present
  double min_request_interval_s = 0.0; // request-rate limit across threads
};

struct HttpResult {
  int status = 0;
  std::string body;
  int attempts = 0;
};

// Minimal OpenAI-compatible JSON-over-HTTP client. Retries transport errors,
// 408/409/429 and 5xx with exponential backoff. Calls are appended to `log`
// (body-level only; the Authorization header is never logged).
class OpenAiClient {
public:
  explicit OpenAiClient(HttpClientOptions options);
  ~OpenAiClient();

  OpenAiClient(const OpenAiClient&) = delete;
  OpenAiClient& operator=(const OpenAiClient&) = delete;

  // Throws TransportError when no 2xx response could be obtained.
  HttpResult post_json(const std::string& path, const std::string& json_body,
                       std::vector<EngineCall>* log) const;

  const HttpClientOptions& options() const { return options_; }

  // Reads CTXLAB_API_BASE / OPENAI_BASE_URL and CTXLAB_API_KEY /
  // OPENAI_API_KEY. Throws ValidationError when no base URL is configured.
  static HttpClientOptions options_from_env();

private:
  void rate_limit_wait() const;

  HttpClientOptions options_;
  std::string host_part_;   // scheme://host[:port]
  std::string path_prefix_; // /v1 or empty
  mutable std::mutex rate_mutex_;
  mutable std::chrono::steady_clock::time_point last_request_;
  mutable bool any_request_ = false;
};

} // namespace ctxlab
