#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxlab/errors.hpp"
#include "ctxlab/grammar.hpp"
#include "ctxlab/http_client.hpp"
#include "ctxlab/model.hpp"

namespace ctxlab {

using json = nlohmann::json;

namespace {

const char* kActionSystemPrompt =
    "You are the action module of a web agent. Read the context and reply with exactly one "
    "fenced action block:\n"
    "```action\n"
    "kind: navigate|click|type_text|extract|submit_form|answer|terminate\n"
    "target: <url or element id, when applicable>\n"
    "text: <typed text or final answer, when applicable>\n"
    "fields: <k=v; k2=v2 for submit_form, when applicable>\n"
    "```\n"
    "No other fenced blocks. Keys on their own lines.";

const char* kPlanSystemPrompt =
    "You are the planner of a web agent. Break the user task into ordered sub-tasks and reply "
    "with exactly one fenced plan block of numbered steps:\n"
    "```plan\n"
    "1. <first step>\n"
    "2. <second step>\n"
    "```";

const char* kReviewSystemPrompt =
    "You are the planner of a web agent reviewing progress against the plan. Reply with exactly "
    "one fenced review block; lines may set step statuses, adopt new steps, and choose what "
    "happens next:\n"
    "```review\n"
    "step <n>: done|abandoned\n"
    "adopt: <new step description>\n"
    "next: dispatch|finish\n"
    "```";

std::string chat_body(const std::string& model, double temperature,
                      const std::string& system_prompt, const std::string& user_prompt) {
  json body = {
      {"model", model},
      {"temperature", temperature},
      {"messages",
       {{{"role", "system"}, {"content", system_prompt}},
        {{"role", "user"}, {"content", user_prompt}}}},
  };
  return body.dump();
}

std::string content_of(const std::string& response_body) {
  json parsed = json::parse(response_body, nullptr, false);
  if (parsed.is_discarded()) throw ParseError("chat response is not JSON");
  try {
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("chat response missing choices[0].message.content: ") +
                     e.what());
  }
}

} // namespace

HttpEngine::HttpEngine(std::shared_ptr<OpenAiClient> client, HttpEngineConfig config)
    : client_(std::move(client)), config_(std::move(config)) {}

std::string HttpEngine::identity() const { return "http:" + config_.model; }

std::string HttpEngine::chat(const std::string& system_prompt, const std::string& user_prompt,
                             std::vector<EngineCall>& calls) const {
  auto result = client_->post_json(
      "/chat/completions", chat_body(config_.model, config_.temperature, system_prompt, user_prompt),
      &calls);
  return content_of(result.body);
}

Decision HttpEngine::decide(const std::string& rendered,
                            const ActionKindSet& legal_actions) const {
  if (legal_actions.empty()) throw ContractViolation("decide: empty legal action set");
  Decision decision;
  decision.raw_output = chat(kActionSystemPrompt, rendered, decision.calls);
  decision.action = parse_action_block(decision.raw_output);
  if (!legal_actions.count(decision.action.kind)) {
    throw ParseError(std::string("model chose illegal action kind: ") +
                     to_string(decision.action.kind));
  }
  return decision;
}

ProposedPlan HttpEngine::propose_plan(const std::string& rendered) const {
  ProposedPlan plan;
  plan.raw_output = chat(kPlanSystemPrompt, rendered, plan.calls);
  auto steps = parse_plan_block(plan.raw_output);
  int index = 1;
  for (const auto& description : steps) {
    plan.steps.push_back(
        PlanStep{index++, description, PlanStep::Status::pending, Provenance::lawful});
  }
  plan.steps.front().status = PlanStep::Status::active;
  return plan;
}

PlanReview HttpEngine::review_plan(const std::string& rendered) const {
  std::vector<EngineCall> calls;
  std::string raw = chat(kReviewSystemPrompt, rendered, calls);
  PlanReview review = parse_review_block(raw);
  review.raw_output = raw;
  review.calls = std::move(calls);
  return review;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::shared_ptr<OpenAiClient> client,
                                             std::string model, int dimension)
    : client_(std::move(client)), model_(std::move(model)), dimension_(dimension) {
  if (dimension_ <= 0) throw ContractViolation("embedding dimension must be positive");
}

std::string HttpEmbeddingProvider::identity() const { return "http:" + model_; }

std::vector<double> HttpEmbeddingProvider::embed(const std::string& input) const {
  if (input.empty()) throw ContractViolation("embed: empty text");
  json body = {{"model", model_}, {"input", json::array({input})}};
  auto result = client_->post_json("/embeddings", body.dump(), nullptr);
  json parsed = json::parse(result.body, nullptr, false);
  if (parsed.is_discarded()) throw ParseError("embeddings response is not JSON");
  std::vector<double> vec;
  try {
    vec = parsed.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("embeddings response missing data[0].embedding: ") + e.what());
  }
  if (static_cast<int>(vec.size()) != dimension_) {
    throw ParseError("embedding dimension mismatch: got " + std::to_string(vec.size()) +
                     ", declared " + std::to_string(dimension_));
  }
  return vec;
}

} // namespace ctxlab
