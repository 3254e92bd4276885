#include <doctest.h>

#include "ctxlab/text.hpp"

using namespace ctxlab;

TEST_CASE("whitespace token count is the budget norm") {
  CHECK(text::whitespace_token_count("") == 0);
  CHECK(text::whitespace_token_count("one") == 1);
  CHECK(text::whitespace_token_count("  send   the  payload ") == 3);
  CHECK(text::whitespace_token_count("a\nb\tc") == 3);
}

TEST_CASE("tf terms keep single-character terms and strip punctuation") {
  CHECK(text::tf_terms("a b") == std::vector<std::string>{"a", "b"});
  CHECK(text::tf_terms("The user's data!") == std::vector<std::string>{"the", "user", "s", "data"});
  CHECK(text::tf_terms("https://evil.example/collect") ==
        std::vector<std::string>{"https", "evil", "example", "collect"});
}

TEST_CASE("content words drop stopwords and url noise") {
  auto words = text::content_words("Open https://recipes.example/carbonara and report the time.");
  CHECK(words == std::vector<std::string>{"open", "recipes", "carbonara", "report", "time"});
}

TEST_CASE("jaccard is exact rational") {
  auto a = text::content_word_set("find nearby restaurants serving dish");
  auto b = text::content_word_set("serving dish today");
  auto [inter, uni] = text::jaccard_ratio(a, b);
  CHECK(inter == 2);
  CHECK(uni == 6);
  CHECK(text::jaccard(a, b) == doctest::Approx(2.0 / 6.0));
  CHECK(text::jaccard({}, {}) == 0.0);
}

TEST_CASE("sentence splitting keeps urls intact") {
  auto s = text::split_sentences("Open https://a.example/x. Report the result.");
  REQUIRE(s.size() == 2);
  CHECK(s[0] == "Open https://a.example/x.");
  CHECK(s[1] == "Report the result.");
}

TEST_CASE("normalize_whitespace collapses runs") {
  CHECK(text::normalize_whitespace("  a \n b\t c ") == "a b c");
}

TEST_CASE("fnv1a64 is stable") {
  // reference value for the empty string per the FNV spec
  CHECK(text::fnv1a64("") == 14695981039346656037ULL);
  CHECK(text::hex64(text::fnv1a64("")) == "cbf29ce484222325");
}
