#include <doctest.h>

#include <atomic>
#include <memory>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ctxlab/errors.hpp"
#include "ctxlab/http_client.hpp"
#include "ctxlab/model.hpp"

using namespace ctxlab;
using json = nlohmann::json;

namespace {

// Local OpenAI-compatible stub. Each test configures its behavior.
class StubServer {
public:
  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      int n = ++requests_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      if (n <= fail_first_) {
        res.status = fail_status_;
        if (retry_after_) res.set_header("Retry-After", "1");
        res.set_content("{\"error\":\"overloaded\"}", "application/json");
        return;
      }
      json reply = {{"choices", {{{"message", {{"content", reply_content_}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request&, httplib::Response& res) {
      ++requests_;
      json reply = {{"data", {{{"embedding", {0.6, 0.8}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this]() { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::atomic<int> requests_{0};
  int fail_first_ = 0;
  int fail_status_ = 500;
  bool retry_after_ = false;
  std::string reply_content_ = "```action\nkind: extract\n```";
  std::string last_auth_;
  std::string last_body_;

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpClientOptions fast_options(const std::string& base_url) {
  HttpClientOptions options;
  options.base_url = base_url;
  options.api_key = "sk-test-secret";
  options.max_retries = 2;
  options.backoff_base_ms = 10;
  return options;
}

} // namespace

TEST_CASE("client retries 5xx and succeeds") {
  StubServer server;
  server.fail_first_ = 2;
  OpenAiClient client(fast_options(server.base_url()));
  std::vector<EngineCall> log;
  auto result = client.post_json("/chat/completions", "{}", &log);
  CHECK(result.status == 200);
  CHECK(result.attempts == 3);
  CHECK(server.requests_ == 3);
  // every attempt with a response is logged; credentials never appear
  CHECK(log.size() == 3);
  for (const auto& call : log) {
    CHECK(call.request.find("sk-test-secret") == std::string::npos);
    CHECK(call.response.find("sk-test-secret") == std::string::npos);
  }
  CHECK(server.last_auth_ == "Bearer sk-test-secret");
}

TEST_CASE("client surfaces a typed transport error with retry metadata") {
  StubServer server;
  server.fail_first_ = 99;
  OpenAiClient client(fast_options(server.base_url()));
  try {
    client.post_json("/chat/completions", "{}", nullptr);
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.status == 500);
    CHECK(e.attempts == 3); // 1 + max_retries
  }
}

TEST_CASE("non-retryable status fails fast") {
  StubServer server;
  server.fail_first_ = 99;
  server.fail_status_ = 401;
  OpenAiClient client(fast_options(server.base_url()));
  try {
    client.post_json("/chat/completions", "{}", nullptr);
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.status == 401);
    CHECK(e.attempts == 1);
  }
}

TEST_CASE("http engine decides through the chat endpoint") {
  StubServer server;
  server.reply_content_ = "```action\nkind: navigate\ntarget: https://a.example/\n```";
  auto client = std::make_shared<OpenAiClient>(fast_options(server.base_url()));
  HttpEngine engine(client, HttpEngineConfig{"test-model", 0.0});
  auto decision = engine.decide("=== TASK ===\ngo", all_action_kinds());
  CHECK(decision.action.kind == Action::Kind::navigate);
  CHECK(decision.action.target == "https://a.example/");
  REQUIRE(decision.calls.size() == 1);
  CHECK(decision.calls[0].endpoint == "/v1/chat/completions");
  CHECK(decision.calls[0].request.find("test-model") != std::string::npos);

  json body = json::parse(server.last_body_);
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("temperature") == 0.0);
}

TEST_CASE("http engine surfaces malformed model output as ParseError") {
  StubServer server;
  server.reply_content_ = "I refuse to answer in the required format.";
  auto client = std::make_shared<OpenAiClient>(fast_options(server.base_url()));
  HttpEngine engine(client, HttpEngineConfig{"test-model", 0.0});
  CHECK_THROWS_AS(engine.decide("ctx", all_action_kinds()), ParseError);
}

TEST_CASE("http engine parses plans and reviews") {
  StubServer server;
  auto client = std::make_shared<OpenAiClient>(fast_options(server.base_url()));
  HttpEngine engine(client, HttpEngineConfig{"test-model", 0.0});

  server.reply_content_ = "```plan\n1. Open https://a.example/\n2. Report the fact\n```";
  auto plan = engine.propose_plan("ctx");
  REQUIRE(plan.steps.size() == 2);
  CHECK(plan.steps[0].status == PlanStep::Status::active);

  server.reply_content_ = "```review\nstep 1: done\nnext: dispatch\n```";
  auto review = engine.review_plan("ctx");
  REQUIRE(review.status_changes.size() == 1);
  CHECK(review.next == PlanReview::Next::dispatch);
}

TEST_CASE("http embedding provider returns the declared dimension") {
  StubServer server;
  auto client = std::make_shared<OpenAiClient>(fast_options(server.base_url()));
  HttpEmbeddingProvider provider(client, "embed-model", 2);
  auto v = provider.embed("text");
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(0.6));
  HttpEmbeddingProvider wrong(client, "embed-model", 7);
  CHECK_THROWS_AS(wrong.embed("text"), ParseError);
}
