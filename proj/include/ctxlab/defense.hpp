#pragma once

#include <set>
#include <string>

#include "ctxlab/context.hpp"

namespace ctxlab {

enum class Defense { sandwich, secure };

const char* to_string(Defense d);
Defense defense_from_string(const std::string& s);

using DefenseSet = std::set<Defense>;

std::string to_string(const DefenseSet& set); // "none" / "sandwich" / "sandwich+secure"

// Text version stamp recorded with results, so ASR tables are only compared
// across runs that used identical defense wording.
inline constexpr const char* kDefenseTextVersion = "1";

// The fixed boundary instruction that precedes every sandwiched data block.
const std::string& sandwich_boundary_instruction();

// The fixed safety-guideline block the Secure defense appends to the system
// prompt.
const std::string& secure_guideline_block();

// Wraps retrieved content in <data> tags preceded by the boundary
// instruction. Idempotent: an already wrapped item is returned unchanged.
DataItem sandwich_wrap(const DataItem& item);

bool is_sandwich_wrapped(const std::string& content);

// Content between the <data> tags of a wrapped item; unwrapped content is
// returned as-is.
std::string sandwich_inner(const std::string& content);

// Appends the safety-guideline block to the static knowledge. Idempotent.
std::string secure_system_prompt(const std::string& static_knowledge);

bool has_secure_guidelines(const std::string& static_knowledge);

} // namespace ctxlab
