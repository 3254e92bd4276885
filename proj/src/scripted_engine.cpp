#include <algorithm>
#include <optional>
#include <sstream>

#include "ctxlab/defense.hpp"
#include "ctxlab/directives.hpp"
#include "ctxlab/errors.hpp"
#include "ctxlab/grammar.hpp"
#include "ctxlab/model.hpp"
#include "ctxlab/text.hpp"

// Scripted personas. Everything here is a pure function of the rendered
// context text: the engine re-parses the sections the renderer emitted and
// applies fixed rules. Persona semantics are documented in the README
// (Scripted personas).

namespace ctxlab {

const char* to_string(Persona p) {
  switch (p) {
    case Persona::gullible: return "gullible";
    case Persona::aligned: return "aligned";
    case Persona::plan_validating: return "plan_validating";
  }
  throw ContractViolation("malformed persona");
}

Persona persona_from_string(const std::string& s) {
  if (s == "gullible") return Persona::gullible;
  if (s == "aligned") return Persona::aligned;
  if (s == "plan_validating") return Persona::plan_validating;
  throw ValidationError("unknown persona: " + s);
}

namespace {

struct Section {
  std::string task;
  std::string plan;
  std::string active;
  std::string history;
  std::string data;
  std::string system;
};

// Splits a rendering back into its sections.
Section split_sections(const std::string& rendered) {
  struct Marker {
    const char* tag;
    std::string Section::*field;
  };
  static const Marker kMarkers[] = {
      {render_marker::system, &Section::system},   {render_marker::task, &Section::task},
      {render_marker::plan, &Section::plan},       {render_marker::active, &Section::active},
      {render_marker::history, &Section::history}, {render_marker::data, &Section::data},
  };
  Section out;
  std::vector<std::pair<size_t, const Marker*>> found;
  for (const auto& marker : kMarkers) {
    size_t pos = rendered.find(marker.tag);
    if (pos != std::string::npos) found.emplace_back(pos, &marker);
  }
  std::sort(found.begin(), found.end());
  for (size_t i = 0; i < found.size(); ++i) {
    size_t begin = found[i].first + std::string(found[i].second->tag).size();
    if (begin < rendered.size() && rendered[begin] == '\n') ++begin;
    size_t end = (i + 1 < found.size()) ? found[i + 1].first : rendered.size();
    out.*(found[i].second->field) = rendered.substr(begin, end - begin);
  }
  return out;
}

struct ParsedPlanLine {
  int index = 0;
  PlanStep::Status status = PlanStep::Status::pending;
  std::string description;
};

PlanStep::Status status_from_token(const std::string& token) {
  if (token == "pending") return PlanStep::Status::pending;
  if (token == "active") return PlanStep::Status::active;
  if (token == "done") return PlanStep::Status::done;
  if (token == "abandoned") return PlanStep::Status::abandoned;
  throw ParseError("unknown plan status token: " + token);
}

// "2. [active] Look up ..." -> {2, active, "Look up ..."}
std::optional<ParsedPlanLine> parse_plan_line(const std::string& line) {
  size_t i = 0;
  while (i < line.size() && isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i + 1 >= line.size() || line[i] != '.') return std::nullopt;
  ParsedPlanLine out;
  out.index = std::stoi(line.substr(0, i));
  size_t lb = line.find('[', i);
  size_t rb = lb == std::string::npos ? std::string::npos : line.find(']', lb);
  if (lb == std::string::npos || rb == std::string::npos) return std::nullopt;
  out.status = status_from_token(line.substr(lb + 1, rb - lb - 1));
  size_t desc = rb + 1;
  while (desc < line.size() && line[desc] == ' ') ++desc;
  out.description = line.substr(desc);
  return out;
}

std::vector<ParsedPlanLine> parse_plan_section(const std::string& section) {
  std::vector<ParsedPlanLine> steps;
  std::istringstream in(section);
  std::string line;
  while (std::getline(in, line)) {
    if (auto parsed = parse_plan_line(line)) steps.push_back(*parsed);
  }
  return steps;
}

struct DataBlock {
  std::string source;
  std::string content;
  bool wrapped = false; // sandwich-wrapped
};

std::vector<DataBlock> parse_data_section(const std::string& section) {
  std::vector<DataBlock> items;
  std::istringstream in(section);
  std::string line;
  DataBlock current;
  bool in_item = false;
  auto flush = [&]() {
    if (in_item) {
      while (!current.content.empty() && current.content.back() == '\n') current.content.pop_back();
      current.wrapped = is_sandwich_wrapped(current.content);
      items.push_back(current);
    }
    current = DataBlock{};
  };
  while (std::getline(in, line)) {
    if (text::starts_with(line, "--- item ")) {
      flush();
      in_item = true;
      size_t src = line.find("source: ");
      if (src != std::string::npos) {
        size_t end = line.find(',', src);
        current.source = line.substr(src + 8, end == std::string::npos ? std::string::npos
                                                                       : end - src - 8);
      }
      continue;
    }
    if (in_item) current.content += line + "\n";
  }
  flush();
  return items;
}

std::vector<std::string> history_lines(const std::string& section) {
  std::vector<std::string> lines;
  std::istringstream in(section);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// "[agent step 3] navigate https://x" -> "navigate https://x"
std::string history_entry_content(const std::string& line) {
  size_t close = line.find("] ");
  return close == std::string::npos ? line : line.substr(close + 2);
}

// --- evidence --------------------------------------------------------------

struct Evidence {
  std::vector<std::string> actions;       // history action descriptions
  std::vector<DataBlock> data;            // data items in order
  std::optional<ParsedPage> current_page; // newest page extract
  std::map<std::string, std::string> profile_fields; // values seen anywhere in data
  std::vector<std::string> submitted_urls;
  bool any_retrieval = false;
};

Evidence gather_evidence(const std::vector<std::string>& history,
                         const std::vector<DataBlock>& data) {
  Evidence ev;
  for (const auto& line : history) ev.actions.push_back(history_entry_content(line));
  ev.data = data;
  for (const auto& item : data) {
    std::string inner = sandwich_inner(item.content);
    if (auto page = parse_page_extract(inner)) {
      if (!text::starts_with(inner, page_text::submitted_prefix)) {
        ev.current_page = page;
        ev.any_retrieval = true;
      }
      for (const auto& [k, v] : parse_profile_fields(page->prose)) ev.profile_fields[k] = v;
    }
    if (text::starts_with(inner, page_text::submitted_prefix)) {
      std::string first_line = inner.substr(0, inner.find('\n'));
      size_t arrow = first_line.find(" -> ");
      if (arrow != std::string::npos) {
        ev.submitted_urls.push_back(first_line.substr(arrow + 4));
      }
    }
  }
  return ev;
}

bool navigated_to(const Evidence& ev, const std::string& url) {
  for (const auto& item : ev.data) {
    std::string inner = sandwich_inner(item.content);
    if (auto page = parse_page_extract(inner)) {
      if (page->url == url) return true;
    }
  }
  return false;
}

bool submitted_to(const Evidence& ev, const std::string& url) {
  return std::find(ev.submitted_urls.begin(), ev.submitted_urls.end(), url) !=
         ev.submitted_urls.end();
}

bool action_in_history(const Evidence& ev, const std::string& description) {
  return std::find(ev.actions.begin(), ev.actions.end(), description) != ev.actions.end();
}

bool directive_satisfied(const Directive& d, const Evidence& ev) {
  switch (d.kind) {
    case Directive::Kind::navigate:
      return navigated_to(ev, d.url);
    case Directive::Kind::exfil:
      return submitted_to(ev, d.url);
    case Directive::Kind::click:
      return action_in_history(ev, "click " + d.element);
    case Directive::Kind::type_into:
      return action_in_history(ev, "type_text \"" + d.text + "\" into " + d.element);
    case Directive::Kind::extract:
      for (const auto& a : ev.actions) {
        if (text::starts_with(a, "extract")) return true;
      }
      return false;
    case Directive::Kind::answer:
    case Directive::Kind::report:
      return false; // terminal: executing one ends the episode
  }
  return false;
}

// report directives need at least one retrieval to answer from
bool directive_executable(const Directive& d, const Evidence& ev) {
  if (d.kind == Directive::Kind::report) return ev.any_retrieval;
  return true;
}

// --- execution ---------------------------------------------------------------

std::string select_report_lines(const Evidence& ev, const std::string& subject) {
  // newest retrieval's prose lines that share a content word with the subject
  // and are not directives themselves (quoting instructions is not obeying
  // them, and it keeps planted payload text out of the final answer)
  if (!ev.current_page) return "No findings.";
  auto subject_words = text::content_word_set(subject);
  std::vector<std::string> selected;
  for (const auto& line : ev.current_page->prose) {
    if (parse_directive_sentence(line).has_value()) continue;
    bool overlap = false;
    for (const auto& w : text::content_words(line)) {
      if (subject_words.count(w)) {
        overlap = true;
        break;
      }
    }
    if (overlap) selected.push_back(text::normalize_whitespace(line));
  }
  if (selected.empty()) {
    for (const auto& line : ev.current_page->prose) {
      if (parse_directive_sentence(line).has_value()) continue;
      selected.push_back(text::normalize_whitespace(line));
      break;
    }
  }
  if (selected.empty()) return "No findings.";
  std::string out;
  for (const auto& line : selected) {
    if (!out.empty()) out += " ";
    out += line;
  }
  return out;
}

// Profile URL advertised in static knowledge ("The user's saved profile is at <url>.")
std::optional<std::string> profile_url_from_system(const std::string& system) {
  size_t pos = system.find("saved profile is at ");
  if (pos == std::string::npos) return std::nullopt;
  return first_url(system.substr(pos));
}

Action execute_directive(const Directive& d, const Evidence& ev, const Section& sections) {
  Action a;
  switch (d.kind) {
    case Directive::Kind::navigate:
      a.kind = Action::Kind::navigate;
      a.target = d.url;
      return a;
    case Directive::Kind::answer:
      a.kind = Action::Kind::answer;
      a.text = d.claim;
      return a;
    case Directive::Kind::report:
      a.kind = Action::Kind::answer;
      a.text = select_report_lines(ev, d.claim);
      return a;
    case Directive::Kind::click:
      a.kind = Action::Kind::click;
      a.target = d.element;
      return a;
    case Directive::Kind::type_into:
      a.kind = Action::Kind::type_text;
      a.target = d.element;
      a.text = d.text;
      return a;
    case Directive::Kind::extract:
      a.kind = Action::Kind::extract;
      return a;
    case Directive::Kind::exfil: {
      // phased: gather profile values, reach the destination, submit inline
      auto wanted = requested_fields(d.claim);
      std::map<std::string, std::string> have;
      for (const auto& f : wanted) {
        auto it = ev.profile_fields.find(f);
        if (it != ev.profile_fields.end()) have[f] = it->second;
      }
      std::string on_page = ev.current_page ? ev.current_page->url : "";
      std::optional<std::string> profile =
          d.source_url.empty() ? profile_url_from_system(sections.system)
                               : std::optional<std::string>(d.source_url);
      if (have.size() < wanted.size() && profile && !navigated_to(ev, *profile)) {
        a.kind = Action::Kind::navigate;
        a.target = *profile;
        return a;
      }
      if (on_page != d.url) {
        a.kind = Action::Kind::navigate;
        a.target = d.url;
        return a;
      }
      // on the destination page: submit its form with whatever we have
      std::string form_id;
      for (const auto& el : ev.current_page->elements) {
        if (el.kind == "form") {
          form_id = el.id;
          break;
        }
      }
      if (form_id.empty()) {
        a.kind = Action::Kind::extract; // no form here; observe and let review cope
        return a;
      }
      a.kind = Action::Kind::submit_form;
      a.target = form_id;
      a.fields = encode_fields(have);
      return a;
    }
  }
  throw ContractViolation("malformed directive kind");
}

// --- directive sourcing with defense filtering ------------------------------

struct Candidate {
  Directive directive;
  bool from_task = false;
};

// Directives an engine may consider, in introduction order: task sentences
// first, then history entries, then data items. Directives inside a
// sandwich-wrapped item are not executable; with Secure guidelines in the
// system prompt no data-item directive is executable. History and task
// directives are never defense-filtered (the defenses transform only k and d).
std::vector<Candidate> gather_candidates(const Section& sections) {
  std::vector<Candidate> out;
  for (const auto& d : parse_directives(sections.task)) {
    out.push_back(Candidate{d, true});
  }
  for (const auto& line : history_lines(sections.history)) {
    std::string content = history_entry_content(line);
    if (text::starts_with(content, "navigate ") || text::starts_with(content, "click ") ||
        text::starts_with(content, "type_text ") || text::starts_with(content, "extract") ||
        text::starts_with(content, "submit_form ") || text::starts_with(content, "answer:")) {
      continue; // the agent's own action log is not an instruction source
    }
    for (const auto& d : parse_directives(content)) out.push_back(Candidate{d, false});
  }
  bool secure_active = has_secure_guidelines(sections.system);
  for (const auto& block : parse_data_section(sections.data)) {
    if (block.wrapped || secure_active) continue;
    std::string inner = sandwich_inner(block.content);
    std::string prose;
    if (auto page = parse_page_extract(inner)) {
      for (const auto& line : page->prose) prose += line + "\n";
    } else {
      prose = inner;
    }
    for (const auto& d : parse_directives(prose)) out.push_back(Candidate{d, false});
  }
  return out;
}

} // namespace

// --- ScriptedEngine ----------------------------------------------------------

ScriptedEngine::ScriptedEngine(Persona persona, ScriptedEngineOptions options)
    : persona_(persona), options_(options) {}

std::string ScriptedEngine::identity() const {
  return std::string("scripted:") + to_string(persona_);
}

bool ScriptedEngine::validates_step(const std::string& step_text,
                                    const std::string& task_text) const {
  auto step_words = text::content_word_set(step_text);
  auto task_words = text::content_word_set(task_text);
  return text::jaccard(step_words, task_words) > options_.jaccard_threshold;
}

Decision ScriptedEngine::decide(const std::string& rendered,
                                const ActionKindSet& legal_actions) const {
  if (legal_actions.empty()) throw ContractViolation("decide: empty legal action set");
  Section sections = split_sections(rendered);
  auto data = parse_data_section(sections.data);
  auto history = history_lines(sections.history);
  Evidence ev = gather_evidence(history, data);

  Action chosen;
  bool have_choice = false;

  if (!sections.active.empty()) {
    // navigator mode: execute the dispatched step
    std::string step_text;
    if (auto line = parse_plan_line(text::normalize_whitespace(sections.active));
        line.has_value()) {
      step_text = line->description;
    } else {
      step_text = text::normalize_whitespace(sections.active);
    }
    auto directives = parse_directives(step_text);
    if (!directives.empty()) {
      chosen = execute_directive(directives.front(), ev, sections);
      have_choice = true;
    } else {
      chosen.kind = Action::Kind::extract; // prose step: observe once, review marks it done
      have_choice = true;
    }
  } else {
    // controller mode
    auto candidates = gather_candidates(sections);
    const std::string& task = sections.task;
    const Candidate* pick = nullptr;
    switch (persona_) {
      case Persona::aligned: {
        for (const auto& c : candidates) {
          if (!c.from_task) continue;
          if (directive_satisfied(c.directive, ev)) continue;
          if (!directive_executable(c.directive, ev)) continue;
          pick = &c;
          break; // first unsatisfied task directive, task order
        }
        break;
      }
      case Persona::gullible:
      case Persona::plan_validating: {
        for (const auto& c : candidates) {
          if (directive_satisfied(c.directive, ev)) continue;
          if (!directive_executable(c.directive, ev)) continue;
          if (persona_ == Persona::plan_validating && !c.from_task &&
              !validates_step(c.directive.raw, task)) {
            continue;
          }
          pick = &c; // keep scanning: the most recently introduced one wins
        }
        break;
      }
    }
    if (pick != nullptr) {
      chosen = execute_directive(pick->directive, ev, sections);
      have_choice = true;
    }
  }

  if (!have_choice) {
    chosen.kind = Action::Kind::terminate; // nothing executable remains
  }
  if (!legal_actions.count(chosen.kind)) {
    chosen = Action{};
    chosen.kind = legal_actions.count(Action::Kind::extract) ? Action::Kind::extract
                                                             : *legal_actions.begin();
  }
  Decision decision;
  decision.action = chosen;
  decision.raw_output = format_action_block(chosen);
  return decision;
}

ProposedPlan ScriptedEngine::propose_plan(const std::string& rendered) const {
  Section sections = split_sections(rendered);
  ProposedPlan plan;
  int index = 1;
  for (const auto& sentence : text::split_sentences(sections.task)) {
    if (parse_directive_sentence(sentence).has_value()) {
      plan.steps.push_back(PlanStep{index++, text::normalize_whitespace(sentence),
                                    PlanStep::Status::pending, Provenance::lawful});
    }
  }
  if (plan.steps.empty()) {
    plan.steps.push_back(PlanStep{1, text::normalize_whitespace(sections.task),
                                  PlanStep::Status::pending, Provenance::lawful});
  }
  plan.steps.front().status = PlanStep::Status::active;
  std::ostringstream raw;
  raw << "```plan\n";
  for (const auto& s : plan.steps) raw << s.index << ". " << s.description << "\n";
  raw << "```";
  plan.raw_output = raw.str();
  return plan;
}

PlanReview ScriptedEngine::review_plan(const std::string& rendered) const {
  Section sections = split_sections(rendered);
  auto plan = parse_plan_section(sections.plan);
  auto data = parse_data_section(sections.data);
  auto history = history_lines(sections.history);
  Evidence ev = gather_evidence(history, data);
  const std::string& task = sections.task;

  PlanReview review;

  // 1. completion of the active step
  const ParsedPlanLine* active = nullptr;
  for (const auto& step : plan) {
    if (step.status == PlanStep::Status::active) active = &step;
  }
  bool action_taken = false;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->find("[agent step") != std::string::npos) {
      action_taken = true;
      break;
    }
  }
  if (active != nullptr) {
    auto directives = parse_directives(active->description);
    bool done = false;
    if (!directives.empty()) {
      done = directive_satisfied(directives.front(), ev);
    } else {
      done = action_taken; // prose step: one dispatch is enough
    }
    if (done) review.status_changes.emplace_back(active->index, PlanStep::Status::done);
  }

  // 2. persona validation of not-yet-finished steps
  if (persona_ != Persona::gullible) {
    for (const auto& step : plan) {
      if (step.status == PlanStep::Status::done || step.status == PlanStep::Status::abandoned) {
        continue;
      }
      bool already_done = false;
      for (const auto& [idx, st] : review.status_changes) {
        if (idx == step.index && st == PlanStep::Status::done) already_done = true;
      }
      if (already_done) continue;
      bool ok = true;
      if (persona_ == Persona::aligned) {
        // traceable to the user task: every content word of the step appears in it
        auto task_words = text::content_word_set(task);
        ok = true;
        for (const auto& w : text::content_words(step.description)) {
          if (!task_words.count(w)) {
            ok = false;
            break;
          }
        }
      } else { // plan_validating
        ok = validates_step(step.description, task);
      }
      if (!ok) review.status_changes.emplace_back(step.index, PlanStep::Status::abandoned);
    }
  }

  // 3. gullible replanning: adopt foreign unsatisfied directives into the plan
  if (persona_ == Persona::gullible) {
    std::set<std::string> in_plan;
    for (const auto& step : plan) {
      for (const auto& d : parse_directives(step.description)) in_plan.insert(d.normalized);
    }
    for (const auto& c : gather_candidates(sections)) {
      if (c.from_task) continue; // task directives are already the plan
      if (in_plan.count(c.directive.normalized)) continue;
      if (directive_satisfied(c.directive, ev)) continue;
      review.adopted_steps.push_back(c.directive.raw);
      in_plan.insert(c.directive.normalized);
    }
  }

  // 4. dispatch decision: any step left to run after the changes above?
  bool anything_runnable = !review.adopted_steps.empty();
  for (const auto& step : plan) {
    PlanStep::Status status = step.status;
    for (const auto& [idx, st] : review.status_changes) {
      if (idx == step.index) status = st;
    }
    if (status == PlanStep::Status::pending || status == PlanStep::Status::active) {
      anything_runnable = true;
    }
  }
  review.next = anything_runnable ? PlanReview::Next::dispatch : PlanReview::Next::finish;

  std::ostringstream raw;
  raw << "```review\n";
  for (const auto& [idx, st] : review.status_changes) {
    raw << "step " << idx << ": " << to_string(st) << "\n";
  }
  for (const auto& s : review.adopted_steps) raw << "adopt: " << s << "\n";
  raw << "next: " << (review.next == PlanReview::Next::dispatch ? "dispatch" : "finish") << "\n";
  raw << "```";
  review.raw_output = raw.str();
  return review;
}

std::unique_ptr<DecisionEngine> make_engine(const EngineConfig& config,
                                            std::shared_ptr<OpenAiClient> client) {
  if (config.kind == EngineConfig::Kind::scripted) {
    ScriptedEngineOptions options;
    options.jaccard_threshold = config.jaccard_threshold;
    return std::make_unique<ScriptedEngine>(config.persona, options);
  }
  if (!client) {
    throw ValidationError("http engine requires a configured client");
  }
  return std::make_unique<HttpEngine>(std::move(client),
                                      HttpEngineConfig{config.model, config.temperature});
}

} // namespace ctxlab
