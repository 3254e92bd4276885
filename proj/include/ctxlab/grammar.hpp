#pragma once

#include <string>
#include <vector>

#include "ctxlab/context.hpp"
#include "ctxlab/model.hpp"

namespace ctxlab {

// The fenced key-value grammar live engines must emit. Strict: unknown kinds,
// missing required keys, or a missing fence raise ParseError.
//
//   ```action
//   kind: navigate
//   target: https://site.example/
//   text: ...        (type_text, answer)
//   fields: k=v; k2=v2   (submit_form)
//   ```
//
//   ```plan
//   1. Open https://site.example/
//   2. Report the result
//   ```
//
//   ```review
//   step 2: done
//   step 3: abandoned
//   adopt: <step description>
//   next: dispatch | finish
//   ```

std::string extract_fenced_block(const std::string& text, const std::string& tag);

Action parse_action_block(const std::string& text);
std::vector<std::string> parse_plan_block(const std::string& text);
PlanReview parse_review_block(const std::string& text);

std::string format_action_block(const Action& a);

} // namespace ctxlab
