#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ctxlab {

// One retrieved/observed piece of external data (page extract, tool output,
// submission confirmation, environment error text).
struct DataItem {
  std::string source;  // URL or tool name
  std::string content;
  int step = 0;

  bool operator==(const DataItem&) const = default;
};

enum class Provenance { lawful, injected };

// Interaction-history entry. `provenance` is evaluator-side ground truth and
// is never rendered: an injected entry is indistinguishable from a lawful one
// in everything the agent sees.
struct MemoryEntry {
  enum class Role { user, agent, tool, environment };
  Role role = Role::agent;
  std::string content;
  int step = 0;
  Provenance provenance = Provenance::lawful;

  bool operator==(const MemoryEntry&) const = default;
};

struct PlanStep {
  enum class Status { pending, active, done, abandoned };
  int index = 1; // 1-based, contiguous within a plan
  std::string description;
  Status status = Status::pending;
  Provenance provenance = Provenance::lawful;

  bool operator==(const PlanStep&) const = default;
};

struct Action {
  enum class Kind { navigate, click, type_text, extract, submit_form, answer, terminate };
  Kind kind = Kind::extract;
  std::string target; // URL (navigate) or element id (click/type_text/submit_form)
  std::string text;   // typed text (type_text) or final answer (answer)
  std::string fields; // "k=v; k2=v2" inline form fields (submit_form)
  int step = 0;

  bool is_terminal() const { return kind == Kind::answer || kind == Kind::terminate; }
  bool operator==(const Action&) const = default;
};

// The five-slot state every decision engine reasons over and every attack
// perturbs: (user_prompt, external_data, static_knowledge, history, plan).
// Values are immutable by convention; transitions return new values.
struct Context {
  std::string user_prompt;
  std::vector<DataItem> external_data;
  std::string static_knowledge;
  std::vector<MemoryEntry> history;
  std::optional<std::vector<PlanStep>> plan;

  bool operator==(const Context&) const = default;
};

enum class RenderView { controller, planner, navigator };

const char* to_string(Action::Kind k);
const char* to_string(MemoryEntry::Role r);
const char* to_string(PlanStep::Status s);
const char* to_string(RenderView v);
Action::Kind action_kind_from_string(const std::string& s);

// One-line rendering of an action, used for history entries and logs.
std::string describe_action(const Action& a);

// Appends one lawful history entry describing `a` and, when non-empty, the
// observation to external_data. user_prompt/static_knowledge/plan unchanged.
Context advance_context(const Context& c, const Action& a, const DataItem& observation);

struct RenderOptions {
  int navigator_data_items = 3; // last-k external_data items shown to the navigator
};

// Deterministic, pure rendering of the tuple into the text an engine consumes.
//   controller: all slots except plan
//   planner:    all slots including plan
//   navigator:  static_knowledge, the active plan step, last-k data items
// Planner/navigator views require plan to be present.
std::string render_context(const Context& c, RenderView view, const RenderOptions& opts = {});

// Plan helpers (plans are edited only through these, so the contiguity and
// single-active invariants hold everywhere).
void validate_plan(const std::vector<PlanStep>& plan);
const PlanStep* active_step(const std::vector<PlanStep>& plan);
std::vector<PlanStep> with_status(std::vector<PlanStep> plan, int index, PlanStep::Status status);
// Marks the next pending step active (after the last non-pending). No-op when
// a step is already active or nothing is pending.
std::vector<PlanStep> activate_next_pending(std::vector<PlanStep> plan);

// Section markers shared by the renderer and the scripted-persona parser.
namespace render_marker {
inline constexpr const char* system = "=== SYSTEM ===";
inline constexpr const char* task = "=== TASK ===";
inline constexpr const char* plan = "=== PLAN ===";
inline constexpr const char* active = "=== ACTIVE STEP ===";
inline constexpr const char* history = "=== HISTORY ===";
inline constexpr const char* data = "=== DATA ===";
} // namespace render_marker

} // namespace ctxlab
