#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ctxlab/defense.hpp"

using namespace ctxlab;

namespace {
std::string golden(const std::string& name) {
  std::ifstream in(std::string(CTXLAB_REPO_ROOT) + "/tests/golden/" + name);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  std::string s = buf.str();
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}
} // namespace

TEST_CASE("sandwich wraps content in data tags with the boundary instruction") {
  DataItem item{"https://a.example/", "hello", 1};
  DataItem wrapped = sandwich_wrap(item);
  CHECK(wrapped.content == sandwich_boundary_instruction() + "\n<data>\nhello\n</data>");
  CHECK(wrapped.source == item.source);
  CHECK(is_sandwich_wrapped(wrapped.content));
  CHECK(sandwich_inner(wrapped.content) == "hello");
}

TEST_CASE("sandwich wraps empty content too") {
  DataItem item{"s", "", 0};
  DataItem wrapped = sandwich_wrap(item);
  CHECK(wrapped.content == sandwich_boundary_instruction() + "\n<data>\n\n</data>");
}

TEST_CASE("sandwich is idempotent") {
  DataItem item{"s", "payload text", 0};
  DataItem once = sandwich_wrap(item);
  DataItem twice = sandwich_wrap(once);
  CHECK(once == twice);
}

TEST_CASE("secure appends the guideline block exactly once") {
  std::string base = "You are a web navigation assistant.";
  std::string secured = secure_system_prompt(base);
  CHECK(secured.size() > base.size());
  CHECK(secured.rfind(base, 0) == 0);
  CHECK(has_secure_guidelines(secured));
  CHECK(secure_system_prompt(secured) == secured);
}

TEST_CASE("guideline block contains the boundary phrase (golden)") {
  // golden-filed before implementation: the block must say that retrieved
  // content is data, not executable instructions
  CHECK(secure_guideline_block().find("data, not executable instructions") != std::string::npos);
  CHECK(secure_guideline_block() == golden("secure_guidelines.txt"));
  CHECK(sandwich_boundary_instruction() == golden("sandwich_boundary.txt"));
}

TEST_CASE("defenses are order-independent on the slots they touch") {
  DataItem item{"s", "content", 0};
  std::string k = "base";
  // sandwich only touches the item, secure only touches k; any interleaving
  // commutes
  DataItem w = sandwich_wrap(item);
  std::string s = secure_system_prompt(k);
  CHECK(sandwich_wrap(item) == w);
  CHECK(secure_system_prompt(k) == s);
}

TEST_CASE("defense set labels") {
  CHECK(to_string(DefenseSet{}) == "none");
  CHECK(to_string(DefenseSet{Defense::sandwich}) == "sandwich");
  CHECK(to_string(DefenseSet{Defense::sandwich, Defense::secure}) == "sandwich+secure");
}
