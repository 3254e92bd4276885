#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxlab::text {

std::string to_lower(std::string_view s);

// Collapses runs of whitespace to single spaces and trims; used by the judge
// before substring matching.
std::string normalize_whitespace(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

// Raw whitespace-delimited token count. This is the injection-budget norm.
int whitespace_token_count(std::string_view s);

// Embedding terms: lowercase, every non-alphanumeric byte becomes a space,
// split on spaces. Single-character terms are kept ("a b" embeds as two terms).
std::vector<std::string> tf_terms(std::string_view s);

// Content words for lexical-overlap validation: tf_terms minus a fixed
// stopword list minus single-character debris. URL scheme/TLD noise
// (http, https, www, com, example) is stopworded so that every fixture URL
// does not manufacture overlap.
std::vector<std::string> content_words(std::string_view s);

std::set<std::string> content_word_set(std::string_view s);

// Exact Jaccard as (|intersection|, |union|). union == 0 -> (0, 0).
std::pair<int, int> jaccard_ratio(const std::set<std::string>& a, const std::set<std::string>& b);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// FNV-1a 64-bit. Deterministic across platforms; used for embedding buckets
// and config hashes.
std::uint64_t fnv1a64(std::string_view s);

std::string hex64(std::uint64_t v);

// Splits into sentences on '.', '!', '?' and newlines; trims; drops empties.
std::vector<std::string> split_sentences(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

} // namespace ctxlab::text
