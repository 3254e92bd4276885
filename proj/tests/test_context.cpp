#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ctxlab/context.hpp"
#include "ctxlab/errors.hpp"

using namespace ctxlab;

namespace {

Context small_context() {
  Context c;
  c.user_prompt = "Open https://factbook.example/population. Report the largest population.";
  c.static_knowledge = "You are a web navigation assistant.";
  c.history = {
      MemoryEntry{MemoryEntry::Role::user, "task accepted", 0, Provenance::lawful},
      MemoryEntry{MemoryEntry::Role::agent, "navigate https://factbook.example/population", 1,
                  Provenance::lawful},
      MemoryEntry{MemoryEntry::Role::tool, "page loaded", 1, Provenance::lawful},
  };
  c.external_data = {DataItem{"https://factbook.example/population", "URL: x\ncontent", 1}};
  return c;
}

std::string repo_path(const std::string& rel) { return std::string(CTXLAB_REPO_ROOT) + "/" + rel; }

} // namespace

TEST_CASE("advance_context appends exactly one history entry") {
  Context c = small_context();
  Action click{Action::Kind::click, "link-1", "", "", 2};
  Context next = advance_context(c, click, DataItem{"https://x", "URL: y\nbody", 2});
  CHECK(next.history.size() == c.history.size() + 1);
  CHECK(next.external_data.size() == c.external_data.size() + 1);
  CHECK(next.user_prompt == c.user_prompt);
  CHECK(next.static_knowledge == c.static_knowledge);
  CHECK(next.plan == c.plan);
  CHECK(next.history.back().content == "click link-1");
  CHECK(next.history.back().provenance == Provenance::lawful);
}

TEST_CASE("terminal action with empty observation adds no data") {
  Context c = small_context();
  Action answer{Action::Kind::answer, "", "India has the largest population", "", 2};
  Context next = advance_context(c, answer, DataItem{});
  CHECK(next.history.size() == 4);
  CHECK(next.external_data.size() == c.external_data.size());
}

TEST_CASE("replaying a five-action fixture trajectory yields the expected history") {
  // expected entries hand-constructed from describe_action before implementation
  Context c;
  c.user_prompt = "Open https://a.example/. Report the fact.";
  c.static_knowledge = "k";
  std::vector<Action> actions = {
      {Action::Kind::navigate, "https://a.example/", "", "", 1},
      {Action::Kind::click, "link-next", "", "", 2},
      {Action::Kind::type_text, "input-q", "carbonara", "", 3},
      {Action::Kind::submit_form, "form-s", "", "name=Alex", 4},
      {Action::Kind::answer, "", "done", "", 5},
  };
  for (const auto& a : actions) c = advance_context(c, a, DataItem{"src", "obs", a.step});
  std::vector<std::string> expected = {
      "navigate https://a.example/",
      "click link-next",
      "type_text \"carbonara\" into input-q",
      "submit_form form-s [name=Alex]",
      "answer: done",
  };
  REQUIRE(c.history.size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(c.history[i].content == expected[i]);
    CHECK(c.history[i].step == static_cast<int>(i) + 1);
  }
}

TEST_CASE("history is append-only: prefix property over lawful transitions") {
  Context c = small_context();
  Context next = c;
  for (int i = 0; i < 5; ++i) {
    Action a{Action::Kind::extract, "", "", "", 10 + i};
    Context after = advance_context(next, a, DataItem{"s", "d", 10 + i});
    REQUIRE(after.history.size() == next.history.size() + 1);
    for (size_t j = 0; j < next.history.size(); ++j) CHECK(after.history[j] == next.history[j]);
    next = after;
  }
}

TEST_CASE("rendering is deterministic and contains the prompt exactly once") {
  Context c = small_context();
  std::string r1 = render_context(c, RenderView::controller);
  std::string r2 = render_context(c, RenderView::controller);
  CHECK(r1 == r2);
  size_t first = r1.find(c.user_prompt);
  REQUIRE(first != std::string::npos);
  CHECK(r1.find(c.user_prompt, first + 1) == std::string::npos);
}

TEST_CASE("provenance is invisible in renderings") {
  Context lawful = small_context();
  Context poisoned = lawful;
  poisoned.history[2].provenance = Provenance::injected;
  CHECK(render_context(lawful, RenderView::controller) ==
        render_context(poisoned, RenderView::controller));

  lawful.plan = {{1, "Open the page", PlanStep::Status::active, Provenance::lawful}};
  poisoned = lawful;
  (*poisoned.plan)[0].provenance = Provenance::injected;
  CHECK(render_context(lawful, RenderView::planner) ==
        render_context(poisoned, RenderView::planner));
}

TEST_CASE("planner view requires a plan") {
  Context c = small_context();
  CHECK_THROWS_AS(render_context(c, RenderView::planner), ContractViolation);
  CHECK_THROWS_AS(render_context(c, RenderView::navigator), ContractViolation);
}

TEST_CASE("planner view lists steps in index order (golden)") {
  Context c;
  c.user_prompt = "Open https://recipes.example/carbonara. Report the cooking time.";
  c.static_knowledge = "You are a web navigation assistant.";
  c.plan = {{1, "Open https://recipes.example/carbonara.", PlanStep::Status::active,
             Provenance::lawful},
            {2, "Report the cooking time.", PlanStep::Status::pending, Provenance::lawful}};
  std::string rendered = render_context(c, RenderView::planner);

  std::ifstream golden(repo_path("tests/golden/render_planner_view.txt"));
  REQUIRE(golden.good());
  std::stringstream expected;
  expected << golden.rdbuf();
  CHECK(rendered == expected.str());
}

TEST_CASE("navigator view shows the active step and last-k data items") {
  Context c;
  c.user_prompt = "task";
  c.static_knowledge = "k";
  c.plan = {{1, "Open https://a.example/.", PlanStep::Status::done, Provenance::lawful},
            {2, "Report the fact.", PlanStep::Status::active, Provenance::lawful}};
  for (int i = 1; i <= 5; ++i) {
    c.external_data.push_back(DataItem{"s" + std::to_string(i), "content" + std::to_string(i), i});
  }
  std::string rendered = render_context(c, RenderView::navigator);
  CHECK(rendered.find("2. [active] Report the fact.") != std::string::npos);
  CHECK(rendered.find("1. [done]") == std::string::npos); // only the active step is visible
  CHECK(rendered.find("content1") == std::string::npos);
  CHECK(rendered.find("content2") == std::string::npos);
  CHECK(rendered.find("content3") != std::string::npos);
  CHECK(rendered.find("content5") != std::string::npos);
  CHECK(rendered.find("task") == std::string::npos); // navigator never sees the prompt
}

TEST_CASE("plan helpers enforce contiguity and single-active") {
  std::vector<PlanStep> plan = {{1, "a", PlanStep::Status::done, Provenance::lawful},
                                {2, "b", PlanStep::Status::active, Provenance::lawful},
                                {3, "c", PlanStep::Status::pending, Provenance::lawful}};
  CHECK_NOTHROW(validate_plan(plan));
  plan[2].index = 5;
  CHECK_THROWS_AS(validate_plan(plan), ContractViolation);
  plan[2].index = 3;
  plan[2].status = PlanStep::Status::active;
  CHECK_THROWS_AS(validate_plan(plan), ContractViolation);

  std::vector<PlanStep> fresh = {{1, "a", PlanStep::Status::done, Provenance::lawful},
                                 {2, "b", PlanStep::Status::pending, Provenance::lawful}};
  auto activated = activate_next_pending(fresh);
  CHECK(activated[1].status == PlanStep::Status::active);
  CHECK(active_step(activated)->index == 2);
}
