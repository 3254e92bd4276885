#include "ctxlab/http_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "ctxlab/errors.hpp"

namespace ctxlab {

namespace {

bool retryable_status(int status) {
  return status == 408 || status == 409 || status == 429 || status >= 500;
}

} // namespace

OpenAiClient::OpenAiClient(HttpClientOptions options) : options_(std::move(options)) {
  const std::string& url = options_.base_url;
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("base_url must include a scheme: " + url);
  }
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    host_part_ = url;
  } else {
    host_part_ = url.substr(0, path_start);
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

OpenAiClient::~OpenAiClient() = default;

HttpClientOptions OpenAiClient::options_from_env() {
  HttpClientOptions options;
  const char* base = std::getenv("CTXLAB_API_BASE");
  if (!base) base = std::getenv("OPENAI_BASE_URL");
  if (!base) {
    throw ValidationError("live mode requires CTXLAB_API_BASE or OPENAI_BASE_URL");
  }
  options.base_url = base;
  const char* key = std::getenv("CTXLAB_API_KEY");
  if (!key) key = std::getenv("OPENAI_API_KEY");
  options.api_key = key ? key : "";
  return options;
}

void OpenAiClient::rate_limit_wait() const {
  if (options_.min_request_interval_s <= 0.0) return;
  auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(options_.min_request_interval_s));
  std::chrono::steady_clock::time_point wake;
  {
    std::lock_guard<std::mutex> lock(rate_mutex_);
    auto now = std::chrono::steady_clock::now();
    if (!any_request_) {
      any_request_ = true;
      last_request_ = now;
      return;
    }
    wake = last_request_ + interval;
    if (wake < now) wake = now;
    last_request_ = wake;
  }
  std::this_thread::sleep_until(wake);
}

HttpResult OpenAiClient::post_json(const std::string& path, const std::string& json_body,
                                   std::vector<EngineCall>* log) const {
  httplib::Client client(host_part_);
  client.set_connection_timeout(options_.connect_timeout_s, 0);
  client.set_read_timeout(options_.read_timeout_s, 0);

  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }

  std::string full_path = path_prefix_ + path;
  HttpResult result;
  std::string last_error = "no attempt made";

  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      int delay_ms = options_.backoff_base_ms * (1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    }
    rate_limit_wait();
    result.attempts = attempt + 1;
    auto response = client.Post(full_path, headers, json_body, "application/json");
    if (!response) {
      last_error = "transport failure: " + httplib::to_string(response.error());
      continue;
    }
    result.status = response->status;
    result.body = response->body;
    if (log) {
      log->push_back(EngineCall{full_path, json_body, response->body, response->status,
                                result.attempts});
    }
    if (response->status >= 200 && response->status < 300) {
      return result;
    }
    last_error = "HTTP " + std::to_string(response->status);
    if (!retryable_status(response->status)) break;
    // honor Retry-After (seconds) when the server sends one
    if (response->has_header("Retry-After")) {
      int seconds = std::atoi(response->get_header_value("Retry-After").c_str());
      if (seconds > 0 && attempt < options_.max_retries) {
        std::this_thread::sleep_for(std::chrono::seconds(seconds));
      }
    }
  }

  if (log && result.status == 0) {
    log->push_back(EngineCall{full_path, json_body, last_error, 0, result.attempts});
  }
  throw TransportError("POST " + full_path + " failed after " + std::to_string(result.attempts) +
                           " attempt(s): " + last_error,
                       result.status, result.attempts);
}

} // namespace ctxlab
