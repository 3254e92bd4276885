#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctxlab/context.hpp"
#include "ctxlab/defense.hpp"
#include "ctxlab/injection.hpp"
#include "ctxlab/model.hpp"
#include "ctxlab/sandbox.hpp"

namespace ctxlab {

enum class Architecture { flat_controller, planner_executor };

const char* to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct AgentConfig {
  Architecture architecture = Architecture::flat_controller;
  const DecisionEngine* controller = nullptr; // flat controller, or the planner
  const DecisionEngine* navigator = nullptr;  // planner_executor only
  int max_steps = 25;
  bool replan_on_review = true; // apply planner review adoptions/changes
  RenderOptions render;
};

// What an episode needs from a benchmark sample.
struct EpisodeSpec {
  std::string sample_id;
  int run_index = 0;
  std::string user_prompt;
  std::string static_knowledge;
};

enum class Termination { answered, terminated, step_limit, invalid };

const char* to_string(Termination t);

struct InjectionEvent {
  int step = 0; // 0 = before the first loop step (plan generation time)
  InjectionVector vector = InjectionVector::MI;
  std::optional<InjectionLevel> level;
  std::string summary; // payload text (steps joined)
};

struct StepRecord {
  int step = 0;
  std::string review_raw; // planner review output, planner_executor only
  std::string decision_raw;
  Action action;
  DataItem observation;
  std::vector<EngineCall> calls;
};

struct Trajectory {
  std::string sample_id;
  int run_index = 0;
  std::string architecture;
  std::vector<Context> snapshots; // initial context + one per executed step
  std::string plan_proposal_raw;  // planner_executor only
  std::vector<StepRecord> steps;
  std::vector<InjectionEvent> injection_events;
  std::vector<InjectionSpec> undelivered_injections;
  std::vector<SinkRecord> exfil_sink;
  std::vector<Submission> submissions;
  Termination termination = Termination::terminated;
  bool valid = true;
  std::string invalid_reason;
  std::string final_answer;
  std::string controller_identity;
  std::string navigator_identity;
};

// Runs one episode: applies defenses at the context boundary, injections per
// their schedules, and records everything the judge needs. Engine failures
// mark the trajectory invalid; they never propagate.
Trajectory run_episode(const AgentConfig& agent, const EpisodeSpec& spec, Sandbox& env,
                       const std::vector<InjectionSpec>& injections, const DefenseSet& defenses);

// Default static knowledge for a site (tool description plus the profile
// pointer the exfil protocol relies on).
std::string default_static_knowledge(const SiteGraph& site);

} // namespace ctxlab
