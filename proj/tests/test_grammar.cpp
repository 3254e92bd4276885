#include <doctest.h>

#include "ctxlab/errors.hpp"
#include "ctxlab/grammar.hpp"

using namespace ctxlab;

TEST_CASE("action block round-trip") {
  Action a;
  a.kind = Action::Kind::submit_form;
  a.target = "form-collect";
  a.fields = "name=Alex Rivera; address=17 Cedar Lane";
  Action parsed = parse_action_block(format_action_block(a));
  CHECK(parsed.kind == a.kind);
  CHECK(parsed.target == a.target);
  CHECK(parsed.fields == a.fields);
}

TEST_CASE("action parsing is strict") {
  CHECK_THROWS_AS(parse_action_block("no block here"), ParseError);
  CHECK_THROWS_AS(parse_action_block("```action\nkind: warp\n```"), ContractViolation);
  CHECK_THROWS_AS(parse_action_block("```action\ntarget: x\n```"), ParseError); // missing kind
  CHECK_THROWS_AS(parse_action_block("```action\nkind: navigate\n```"), ParseError); // no target
  CHECK_THROWS_AS(parse_action_block("```action\nkind: extract\nbogus: 1\n```"), ParseError);
  CHECK_THROWS_AS(parse_action_block("```action\nkind: extract"), ParseError); // unterminated
  Action ok = parse_action_block("model says:\n```action\nkind: answer\ntext: India\n```\ndone");
  CHECK(ok.kind == Action::Kind::answer);
  CHECK(ok.text == "India");
}

TEST_CASE("plan block parses numbered steps in order") {
  auto steps = parse_plan_block("```plan\n1. Open https://a.example/\n2. Report the fact\n```");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0] == "Open https://a.example/");
  CHECK(steps[1] == "Report the fact");
  CHECK_THROWS_AS(parse_plan_block("```plan\n1. a\n3. b\n```"), ParseError);
  CHECK_THROWS_AS(parse_plan_block("```plan\n- a\n```"), ParseError);
  CHECK_THROWS_AS(parse_plan_block("```plan\n```"), ParseError);
}

TEST_CASE("review block parses statuses, adoptions and next") {
  PlanReview review = parse_review_block(
      "```review\nstep 2: done\nstep 3: abandoned\nadopt: Look up the profile\nnext: dispatch\n```");
  REQUIRE(review.status_changes.size() == 2);
  CHECK(review.status_changes[0] == std::make_pair(2, PlanStep::Status::done));
  CHECK(review.status_changes[1] == std::make_pair(3, PlanStep::Status::abandoned));
  REQUIRE(review.adopted_steps.size() == 1);
  CHECK(review.adopted_steps[0] == "Look up the profile");
  CHECK(review.next == PlanReview::Next::dispatch);
  CHECK_THROWS_AS(parse_review_block("```review\nstep 2: finished\n```"), ParseError);
  CHECK_THROWS_AS(parse_review_block("```review\nnonsense\n```"), ParseError);
}
