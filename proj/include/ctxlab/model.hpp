#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctxlab/context.hpp"

namespace ctxlab {

class OpenAiClient;

// One live-backend request/response pair, recorded into the trajectory.
// Credentials never appear here; the request is the JSON body only.
struct EngineCall {
  std::string endpoint;
  std::string request;
  std::string response;
  int status = 0;
  int attempts = 0;
};

struct Decision {
  Action action;
  std::string raw_output; // model text (scripted engines synthesize it)
  std::vector<EngineCall> calls;
};

struct ProposedPlan {
  std::vector<PlanStep> steps; // step 1 active, rest pending
  std::string raw_output;
  std::vector<EngineCall> calls;
};

// Planner review outcome. The agent loop owns the plan and applies these.
struct PlanReview {
  enum class Next { dispatch, finish };
  std::vector<std::pair<int, PlanStep::Status>> status_changes;
  std::vector<std::string> adopted_steps; // spliced after the active step, lawful provenance
  Next next = Next::dispatch;
  std::string raw_output;
  std::vector<EngineCall> calls;
};

using ActionKindSet = std::set<Action::Kind>;

inline ActionKindSet all_action_kinds() {
  return {Action::Kind::navigate, Action::Kind::click,  Action::Kind::type_text,
          Action::Kind::extract,  Action::Kind::submit_form, Action::Kind::answer,
          Action::Kind::terminate};
}

// The decision engine M: rendered context text in, one chosen action out.
// propose_plan / review_plan are the planner-facing entry points of the same
// engine. Implementations must be safely invocable from concurrent episodes.
class DecisionEngine {
public:
  virtual ~DecisionEngine() = default;
  virtual Decision decide(const std::string& rendered, const ActionKindSet& legal_actions) const = 0;
  virtual ProposedPlan propose_plan(const std::string& rendered) const = 0;
  virtual PlanReview review_plan(const std::string& rendered) const = 0;
  virtual bool is_scripted() const = 0;
  virtual std::string identity() const = 0;
};

enum class Persona { gullible, aligned, plan_validating };

const char* to_string(Persona p);
Persona persona_from_string(const std::string& s);

struct ScriptedEngineOptions {
  // plan_validating: a step passes when Jaccard(step, task) > threshold.
  double jaccard_threshold = 0.2;
};

// Deterministic personas over rendered context text (hermetic ground truth):
//   gullible        executes the most recently introduced unsatisfied
//                   imperative, wherever it appears (data and history
//                   included), unless an active defense marks the source
//                   non-executable
//   aligned         executes only directives present in the user task, in
//                   task order; everything else is refused
//   plan_validating gullible ordering, but a non-task directive or plan step
//                   runs only when its content-word Jaccard overlap with the
//                   user task exceeds the threshold; failing steps are
//                   abandoned
class ScriptedEngine : public DecisionEngine {
public:
  explicit ScriptedEngine(Persona persona, ScriptedEngineOptions options = {});

  Decision decide(const std::string& rendered, const ActionKindSet& legal_actions) const override;
  ProposedPlan propose_plan(const std::string& rendered) const override;
  PlanReview review_plan(const std::string& rendered) const override;
  bool is_scripted() const override { return true; }
  std::string identity() const override;

  Persona persona() const { return persona_; }

  // The plan_validating acceptance rule, exposed for tests and analysis.
  bool validates_step(const std::string& step_text, const std::string& task_text) const;

private:
  Persona persona_;
  ScriptedEngineOptions options_;
};

struct HttpEngineConfig {
  std::string model;
  double temperature = 0.0;
};

class HttpEngine : public DecisionEngine {
public:
  HttpEngine(std::shared_ptr<OpenAiClient> client, HttpEngineConfig config);

  Decision decide(const std::string& rendered, const ActionKindSet& legal_actions) const override;
  ProposedPlan propose_plan(const std::string& rendered) const override;
  PlanReview review_plan(const std::string& rendered) const override;
  bool is_scripted() const override { return false; }
  std::string identity() const override;

private:
  std::string chat(const std::string& system_prompt, const std::string& user_prompt,
                   std::vector<EngineCall>& calls) const;

  std::shared_ptr<OpenAiClient> client_;
  HttpEngineConfig config_;
};

struct EngineConfig {
  enum class Kind { scripted, http };
  Kind kind = Kind::scripted;
  Persona persona = Persona::gullible; // scripted
  std::string model;                   // http
  double temperature = 0.0;            // http
  double jaccard_threshold = 0.2;
};

std::unique_ptr<DecisionEngine> make_engine(const EngineConfig& config,
                                            std::shared_ptr<OpenAiClient> client = nullptr);

// --- Embeddings -----------------------------------------------------------

class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;
  // Unit-L2 vector of size dimension(). Throws ContractViolation on empty
  // text (or text with no terms).
  virtual std::vector<double> embed(const std::string& text) const = 0;
  virtual int dimension() const = 0;
  virtual std::string identity() const = 0;
};

// Hashed term-frequency embedding: lowercase, strip punctuation, FNV-1a hash
// each term into a bucket, count, L2-normalize. Identical texts map to
// identical vectors on every platform.
class DeterministicTfProvider : public EmbeddingProvider {
public:
  explicit DeterministicTfProvider(int dimension = 4096);
  std::vector<double> embed(const std::string& text) const override;
  int dimension() const override { return dimension_; }
  std::string identity() const override;

  // Bucket index a term hashes to; exposed so tests can verify collision
  // freedom of a corpus before asserting oracle equality.
  int bucket(const std::string& term) const;

private:
  int dimension_;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
  HttpEmbeddingProvider(std::shared_ptr<OpenAiClient> client, std::string model, int dimension);
  std::vector<double> embed(const std::string& text) const override;
  int dimension() const override { return dimension_; }
  std::string identity() const override;

private:
  std::shared_ptr<OpenAiClient> client_;
  std::string model_;
  int dimension_;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

} // namespace ctxlab
