#include "ctxlab/context.hpp"

#include <sstream>

#include "ctxlab/errors.hpp"

namespace ctxlab {

const char* to_string(Action::Kind k) {
  switch (k) {
    case Action::Kind::navigate: return "navigate";
    case Action::Kind::click: return "click";
    case Action::Kind::type_text: return "type_text";
    case Action::Kind::extract: return "extract";
    case Action::Kind::submit_form: return "submit_form";
    case Action::Kind::answer: return "answer";
    case Action::Kind::terminate: return "terminate";
  }
  throw ContractViolation("malformed action kind");
}

const char* to_string(MemoryEntry::Role r) {
  switch (r) {
    case MemoryEntry::Role::user: return "user";
    case MemoryEntry::Role::agent: return "agent";
    case MemoryEntry::Role::tool: return "tool";
    case MemoryEntry::Role::environment: return "environment";
  }
  throw ContractViolation("malformed memory role");
}

const char* to_string(PlanStep::Status s) {
  switch (s) {
    case PlanStep::Status::pending: return "pending";
    case PlanStep::Status::active: return "active";
    case PlanStep::Status::done: return "done";
    case PlanStep::Status::abandoned: return "abandoned";
  }
  throw ContractViolation("malformed plan step status");
}

const char* to_string(RenderView v) {
  switch (v) {
    case RenderView::controller: return "controller";
    case RenderView::planner: return "planner";
    case RenderView::navigator: return "navigator";
  }
  throw ContractViolation("malformed render view");
}

Action::Kind action_kind_from_string(const std::string& s) {
  if (s == "navigate") return Action::Kind::navigate;
  if (s == "click") return Action::Kind::click;
  if (s == "type_text") return Action::Kind::type_text;
  if (s == "extract") return Action::Kind::extract;
  if (s == "submit_form") return Action::Kind::submit_form;
  if (s == "answer") return Action::Kind::answer;
  if (s == "terminate") return Action::Kind::terminate;
  throw ContractViolation("unknown action kind: " + s);
}

std::string describe_action(const Action& a) {
  std::ostringstream out;
  out << to_string(a.kind);
  switch (a.kind) {
    case Action::Kind::navigate:
      out << " " << a.target;
      break;
    case Action::Kind::click:
      out << " " << a.target;
      break;
    case Action::Kind::type_text:
      out << " \"" << a.text << "\" into " << a.target;
      break;
    case Action::Kind::extract:
      break;
    case Action::Kind::submit_form:
      out << " " << a.target;
      if (!a.fields.empty()) out << " [" << a.fields << "]";
      break;
    case Action::Kind::answer:
      out << ": " << a.text;
      break;
    case Action::Kind::terminate:
      break;
  }
  return out.str();
}

Context advance_context(const Context& c, const Action& a, const DataItem& observation) {
  switch (a.kind) {
    case Action::Kind::navigate:
    case Action::Kind::click:
    case Action::Kind::type_text:
    case Action::Kind::extract:
    case Action::Kind::submit_form:
    case Action::Kind::answer:
    case Action::Kind::terminate:
      break;
    default:
      throw ContractViolation("advance_context: malformed action kind");
  }
  Context next = c;
  next.history.push_back(MemoryEntry{MemoryEntry::Role::agent, describe_action(a), a.step,
                                     Provenance::lawful});
  if (!observation.content.empty()) {
    next.external_data.push_back(observation);
  }
  return next;
}

namespace {

void render_history(std::ostringstream& out, const Context& c) {
  out << render_marker::history << "\n";
  for (const auto& entry : c.history) {
    out << "[" << to_string(entry.role) << " step " << entry.step << "] " << entry.content << "\n";
  }
}

void render_data(std::ostringstream& out, const Context& c, size_t first_index) {
  out << render_marker::data << "\n";
  for (size_t i = first_index; i < c.external_data.size(); ++i) {
    const auto& item = c.external_data[i];
    out << "--- item " << (i + 1) << " (source: " << item.source << ", step " << item.step
        << ") ---\n"
        << item.content << "\n";
  }
}

void render_plan(std::ostringstream& out, const std::vector<PlanStep>& plan) {
  out << render_marker::plan << "\n";
  for (const auto& step : plan) {
    out << step.index << ". [" << to_string(step.status) << "] " << step.description << "\n";
  }
}

} // namespace

std::string render_context(const Context& c, RenderView view, const RenderOptions& opts) {
  if ((view == RenderView::planner || view == RenderView::navigator) && !c.plan.has_value()) {
    throw ContractViolation(std::string(to_string(view)) + " view requires a plan");
  }
  std::ostringstream out;
  out << render_marker::system << "\n" << c.static_knowledge << "\n";
  switch (view) {
    case RenderView::controller: {
      out << render_marker::task << "\n" << c.user_prompt << "\n";
      render_history(out, c);
      render_data(out, c, 0);
      break;
    }
    case RenderView::planner: {
      out << render_marker::task << "\n" << c.user_prompt << "\n";
      render_plan(out, *c.plan);
      render_history(out, c);
      render_data(out, c, 0);
      break;
    }
    case RenderView::navigator: {
      out << render_marker::active << "\n";
      if (const PlanStep* step = active_step(*c.plan)) {
        out << step->index << ". [" << to_string(step->status) << "] " << step->description
            << "\n";
      } else {
        out << "(no active step)\n";
      }
      size_t n = c.external_data.size();
      size_t k = static_cast<size_t>(opts.navigator_data_items < 0 ? 0 : opts.navigator_data_items);
      size_t first = n > k ? n - k : 0;
      render_data(out, c, first);
      break;
    }
  }
  return out.str();
}

void validate_plan(const std::vector<PlanStep>& plan) {
  int active_count = 0;
  for (size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].index != static_cast<int>(i) + 1) {
      throw ContractViolation("plan indices must be contiguous from 1");
    }
    if (plan[i].status == PlanStep::Status::active) ++active_count;
  }
  if (active_count > 1) {
    throw ContractViolation("at most one plan step may be active");
  }
}

const PlanStep* active_step(const std::vector<PlanStep>& plan) {
  for (const auto& step : plan) {
    if (step.status == PlanStep::Status::active) return &step;
  }
  return nullptr;
}

std::vector<PlanStep> with_status(std::vector<PlanStep> plan, int index, PlanStep::Status status) {
  bool found = false;
  for (auto& step : plan) {
    if (step.index == index) {
      step.status = status;
      found = true;
    }
  }
  if (!found) throw ContractViolation("with_status: no plan step with index " + std::to_string(index));
  validate_plan(plan);
  return plan;
}

std::vector<PlanStep> activate_next_pending(std::vector<PlanStep> plan) {
  if (active_step(plan) != nullptr) return plan;
  for (auto& step : plan) {
    if (step.status == PlanStep::Status::pending) {
      step.status = PlanStep::Status::active;
      break;
    }
  }
  return plan;
}

} // namespace ctxlab
