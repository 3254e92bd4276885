#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctxlab/context.hpp"

namespace ctxlab {

class DecisionEngine;

enum class InjectionVector { DPI, IPI, MI, PLAN };

enum class InjectionLevel { non_contextual, task_aligned, context_chained };

const char* to_string(InjectionVector v);
const char* to_string(InjectionLevel l);
InjectionVector injection_vector_from_string(const std::string& s);
InjectionLevel injection_level_from_string(const std::string& s);

// When the perturbation is applied. every_retrieval is valid for IPI only.
struct InjectionSchedule {
  enum class When { once_at_step, every_retrieval };
  When when = When::once_at_step;
  int step = 1;

  bool operator==(const InjectionSchedule&) const = default;
};

// A bounded perturbation of one context slot. PLAN payloads are ordered step
// descriptions; the other vectors carry a single text payload. The budget is
// a whitespace-delimited token count over the whole payload.
struct InjectionSpec {
  InjectionVector vector = InjectionVector::MI;
  std::optional<InjectionLevel> level; // PLAN and MI only; DPI/IPI carry raw payloads
  std::string payload;                 // DPI / IPI / MI
  std::vector<std::string> payload_steps; // PLAN
  int budget = 120;
  InjectionSchedule schedule;
  std::optional<int> splice_after;     // PLAN: splice position; default is after the active step

  bool empty_payload() const { return payload.empty() && payload_steps.empty(); }
  // Flattened payload text (steps joined by a space) for budgeting,
  // similarity analysis, and MI rendering.
  std::string payload_text() const;
  int token_count() const;

  bool operator==(const InjectionSpec&) const = default;
};

struct AttackerGoal {
  enum class Kind {
    factual_manipulation,
    opinion_steering,
    advertisement,
    privacy_exfiltration,
    goal_hijack
  };
  Kind kind = Kind::factual_manipulation;
  // Wrong answer / injected viewpoint / product name / exfil destination URL.
  std::string target_payload;
  std::vector<std::string> sensitive_fields; // privacy goals

  // Natural-language statement of the goal, used as the embedding target in
  // the similarity analysis.
  std::string description() const;

  bool operator==(const AttackerGoal&) const = default;
};

const char* to_string(AttackerGoal::Kind k);
AttackerGoal::Kind goal_kind_from_string(const std::string& s);

// c* = c (+) delta. Exactly one slot of the result differs from `c`: DPI
// appends to user_prompt, IPI appends a DataItem, MI appends an injected
// MemoryEntry, PLAN splices injected steps after the active step and
// reindexes. Empty payloads are the identity. Throws BudgetError when the
// payload exceeds its budget and ContractViolation for PLAN on a plan-less
// context.
Context apply_injection(const Context& c, const InjectionSpec& spec);

// The per-sample slice of a benchmark task that injection crafting consumes.
struct CraftTask {
  std::string victim_task;
  std::string foot_in_door_context; // context_chained opener
  std::string task_noun;            // task-domain vocabulary slot
  std::string intermediary;         // chain middle step; empty selects the default
  std::string exfil_subject;        // chain terminal subject; empty selects "this information"
  std::string profile_url;          // privacy goals: where the sensitive fields live
};

// The single-step directive that states the goal outright (the non-contextual
// payload, and the terminal step of a context chain).
std::string goal_directive(const AttackerGoal& goal, const CraftTask& task);

// Crafts a PLAN injection at the given sophistication level. With a scripted
// (or null) backend the output is a deterministic string template fill; an
// http backend is asked to propose the steps and the result is validated.
// Crafted payloads over budget raise BudgetError rather than truncating.
InjectionSpec craft_plan_injection(const AttackerGoal& goal, const CraftTask& task,
                                   InjectionLevel level, const DecisionEngine* backend,
                                   int budget = 120);

} // namespace ctxlab
