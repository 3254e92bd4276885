#include "ctxlab/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <unordered_set>

namespace ctxlab::text {

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kStopwords = {
      "a",    "an",    "the",  "and",   "or",    "but",   "if",    "then",
      "else", "when",  "while","to",    "of",    "in",    "on",    "at",
      "by",   "for",   "with", "from",  "into",  "onto",  "as",    "is",
      "are",  "was",   "were", "be",    "been",  "being", "do",    "does",
      "did",  "done",  "can",  "could", "should","would", "may",   "might",
      "must", "will",  "shall","it",    "its",   "this",  "that",  "these",
      "those","there", "here", "he",    "she",   "they",  "them",  "his",
      "her",  "their", "you",  "your",  "we",    "our",   "us",    "i",
      "me",   "my",    "not",  "no",    "yes",   "please","also",  "any",
      "all",  "each",  "both", "than",  "so",    "too",   "very",  "just",
      "http", "https", "www",  "com",   "example"};
  return kStopwords;
}

} // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true; // leading whitespace dropped
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) {
        out.push_back(' ');
        in_space = true;
      }
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

int whitespace_token_count(std::string_view s) {
  int count = 0;
  bool in_token = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::string> tf_terms(std::string_view s) {
  std::vector<std::string> terms;
  std::string current;
  for (char c : s) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      terms.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) terms.push_back(std::move(current));
  return terms;
}

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& term : tf_terms(s)) {
    if (term.size() < 2) continue;
    if (stopwords().count(term)) continue;
    out.push_back(term);
  }
  return out;
}

std::set<std::string> content_word_set(std::string_view s) {
  auto words = content_words(s);
  return {words.begin(), words.end()};
}

std::pair<int, int> jaccard_ratio(const std::set<std::string>& a, const std::set<std::string>& b) {
  int inter = 0;
  for (const auto& w : a) {
    if (b.count(w)) ++inter;
  }
  int uni = static_cast<int>(a.size() + b.size()) - inter;
  return {inter, uni};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  auto [inter, uni] = jaccard_ratio(a, b);
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> sentences;
  std::string current;
  for (char c : s) {
    if (c == '.' || c == '!' || c == '?' || c == '\n') {
      // Keep dots inside URLs/numbers: a sentence boundary needs whitespace
      // or end-of-text after it, which we approximate by peeking via buffer.
      current.push_back(c);
      if (c == '\n') {
        current.pop_back();
        if (!current.empty()) sentences.push_back(current);
        current.clear();
      }
    } else {
      if (!current.empty() && (current.back() == '.' || current.back() == '!' || current.back() == '?')) {
        if (std::isspace(static_cast<unsigned char>(c))) {
          sentences.push_back(current);
          current.clear();
          continue;
        }
      }
      current.push_back(c);
    }
  }
  if (!current.empty()) sentences.push_back(current);
  for (auto& sent : sentences) {
    // trim
    size_t b = sent.find_first_not_of(" \t\r");
    size_t e = sent.find_last_not_of(" \t\r");
    sent = (b == std::string::npos) ? std::string() : sent.substr(b, e - b + 1);
  }
  std::vector<std::string> out;
  for (auto& sent : sentences) {
    if (!sent.empty()) out.push_back(sent);
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

} // namespace ctxlab::text
