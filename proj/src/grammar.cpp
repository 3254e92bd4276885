#include "ctxlab/grammar.hpp"

#include <sstream>

#include "ctxlab/errors.hpp"
#include "ctxlab/text.hpp"

namespace ctxlab {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> lines_of(const std::string& block) {
  std::vector<std::string> lines;
  std::istringstream in(block);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (!t.empty()) lines.push_back(t);
  }
  return lines;
}

} // namespace

std::string extract_fenced_block(const std::string& text, const std::string& tag) {
  std::string open = "```" + tag;
  size_t begin = text.find(open);
  if (begin == std::string::npos) {
    throw ParseError("no ```" + tag + " block in model output");
  }
  begin += open.size();
  if (begin < text.size() && text[begin] == '\n') ++begin;
  size_t end = text.find("```", begin);
  if (end == std::string::npos) {
    throw ParseError("unterminated ```" + tag + " block");
  }
  return text.substr(begin, end - begin);
}

Action parse_action_block(const std::string& text) {
  std::string block = extract_fenced_block(text, "action");
  Action a;
  bool have_kind = false;
  for (const auto& line : lines_of(block)) {
    size_t colon = line.find(':');
    if (colon == std::string::npos) throw ParseError("action line without key: " + line);
    std::string key = trim(line.substr(0, colon));
    std::string value = trim(line.substr(colon + 1));
    if (key == "kind") {
      a.kind = action_kind_from_string(value); // throws ContractViolation on junk
      have_kind = true;
    } else if (key == "target") {
      a.target = value;
    } else if (key == "text") {
      a.text = value;
    } else if (key == "fields") {
      a.fields = value;
    } else {
      throw ParseError("unknown action key: " + key);
    }
  }
  if (!have_kind) throw ParseError("action block missing kind");
  switch (a.kind) {
    case Action::Kind::navigate:
    case Action::Kind::click:
    case Action::Kind::submit_form:
      if (a.target.empty()) throw ParseError("action kind requires target");
      break;
    case Action::Kind::type_text:
      if (a.target.empty()) throw ParseError("type_text requires target");
      break;
    case Action::Kind::extract:
    case Action::Kind::answer:
    case Action::Kind::terminate:
      break;
  }
  return a;
}

std::vector<std::string> parse_plan_block(const std::string& text) {
  std::string block = extract_fenced_block(text, "plan");
  std::vector<std::string> steps;
  for (const auto& line : lines_of(block)) {
    size_t i = 0;
    while (i < line.size() && isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || line[i] != '.') {
      throw ParseError("plan line is not a numbered step: " + line);
    }
    if (static_cast<int>(steps.size()) + 1 != std::stoi(line.substr(0, i))) {
      throw ParseError("plan step numbering is not contiguous at: " + line);
    }
    steps.push_back(trim(line.substr(i + 1)));
  }
  if (steps.empty()) throw ParseError("plan block has no steps");
  return steps;
}

PlanReview parse_review_block(const std::string& text) {
  std::string block = extract_fenced_block(text, "review");
  PlanReview review;
  for (const auto& line : lines_of(block)) {
    if (text::starts_with(line, "step ")) {
      size_t colon = line.find(':');
      if (colon == std::string::npos) throw ParseError("review step line without status: " + line);
      int index = std::stoi(line.substr(5, colon - 5));
      std::string status = trim(line.substr(colon + 1));
      if (status == "done") {
        review.status_changes.emplace_back(index, PlanStep::Status::done);
      } else if (status == "abandoned") {
        review.status_changes.emplace_back(index, PlanStep::Status::abandoned);
      } else if (status == "active") {
        review.status_changes.emplace_back(index, PlanStep::Status::active);
      } else if (status == "pending") {
        review.status_changes.emplace_back(index, PlanStep::Status::pending);
      } else {
        throw ParseError("unknown review status: " + status);
      }
    } else if (text::starts_with(line, "adopt:")) {
      std::string step = trim(line.substr(6));
      if (step.empty()) throw ParseError("adopt line without step text");
      review.adopted_steps.push_back(step);
    } else if (text::starts_with(line, "next:")) {
      std::string next = trim(line.substr(5));
      if (next == "dispatch") {
        review.next = PlanReview::Next::dispatch;
      } else if (next == "finish") {
        review.next = PlanReview::Next::finish;
      } else {
        throw ParseError("unknown review next: " + next);
      }
    } else {
      throw ParseError("unknown review line: " + line);
    }
  }
  return review;
}

std::string format_action_block(const Action& a) {
  std::ostringstream out;
  out << "```action\n";
  out << "kind: " << to_string(a.kind) << "\n";
  if (!a.target.empty()) out << "target: " << a.target << "\n";
  if (!a.text.empty()) out << "text: " << a.text << "\n";
  if (!a.fields.empty()) out << "fields: " << a.fields << "\n";
  out << "```";
  return out.str();
}

} // namespace ctxlab
