#pragma once

#include <stdexcept>
#include <string>

namespace ctxlab {

// Caller broke a documented precondition (malformed action kind, plan
// injection on a plan-less context, planner view without a plan, ...).
class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Injection payload exceeds its declared budget.
class BudgetError : public std::runtime_error {
public:
  BudgetError(const std::string& what, int tokens, int budget)
      : std::runtime_error(what), tokens(tokens), budget(budget) {}
  int tokens;
  int budget;
};

// Live-backend transport failure (connect error, HTTP status, exhausted retries).
class TransportError : public std::runtime_error {
public:
  explicit TransportError(const std::string& what, int status = 0, int attempts = 0)
      : std::runtime_error(what), status(status), attempts(attempts) {}
  int status;   // last HTTP status, 0 if no response
  int attempts; // requests made before giving up
};

// Model output did not match the documented fenced grammar.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Benchmark / site / config file failed schema or cross-reference checks.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ctxlab
