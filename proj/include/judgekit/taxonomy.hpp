#pragma once

// Failure classification. One class per judged candidate, with a fixed
// priority for mixed per-test outcomes: rarer resource failures outrank
// later wrong outputs (memory > timeout > crash > no_output > wrong_output).

#include <array>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "judgekit/executor.hpp"
#include "judgekit/text.hpp"

namespace judgekit {

enum class OutcomeClass {
  pass,
  wrong_output,
  no_output,
  timeout,
  crash,
  memory_error,
  syntax_error,
};

inline constexpr std::array<OutcomeClass, 7> kOutcomeClasses = {
    OutcomeClass::pass,        OutcomeClass::wrong_output, OutcomeClass::no_output,
    OutcomeClass::timeout,     OutcomeClass::crash,        OutcomeClass::memory_error,
    OutcomeClass::syntax_error,
};

inline const char* to_string(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::pass: return "pass";
    case OutcomeClass::wrong_output: return "wrong_output";
    case OutcomeClass::no_output: return "no_output";
    case OutcomeClass::timeout: return "timeout";
    case OutcomeClass::crash: return "crash";
    case OutcomeClass::memory_error: return "memory_error";
    case OutcomeClass::syntax_error: return "syntax_error";
  }
  return "?";
}

inline std::optional<OutcomeClass> outcome_from_string(std::string_view s) {
  for (OutcomeClass c : kOutcomeClasses)
    if (s == to_string(c)) return c;
  return std::nullopt;
}

inline OutcomeClass classify(const SyntaxReport& syntax,
                             const std::vector<TestExecution>& runs) {
  if (!syntax.valid) return OutcomeClass::syntax_error;
  if (runs.empty())
    throw std::logic_error("classify: no runs for a syntactically valid candidate");

  bool all_matched = true;
  bool any_memory = false, any_timeout = false, any_nonzero = false;
  bool any_emitted = false;
  for (const TestExecution& r : runs) {
    all_matched = all_matched && r.matched;
    any_memory = any_memory || r.status == RunStatus::killed_memory;
    any_timeout = any_timeout || r.status == RunStatus::killed_timeout;
    any_nonzero = any_nonzero || r.status == RunStatus::exited_nonzero;
    if (r.status == RunStatus::exited_zero && !normalizes_empty(r.stdout_text))
      any_emitted = true;
  }
  if (all_matched) return OutcomeClass::pass;
  if (any_memory) return OutcomeClass::memory_error;
  if (any_timeout) return OutcomeClass::timeout;
  if (any_nonzero) return OutcomeClass::crash;
  // Remaining runs all exited zero; silence on every test means the program
  // never produced information for the judge.
  return any_emitted ? OutcomeClass::wrong_output : OutcomeClass::no_output;
}

struct TaxonomyDistribution {
  std::array<int, 7> counts{};  // indexed by OutcomeClass order
  // Shares over failures only (pass excluded); absent for an all-pass corpus.
  std::optional<std::array<double, 7>> failure_shares;

  int count(OutcomeClass c) const { return counts[static_cast<std::size_t>(c)]; }
  double share(OutcomeClass c) const {
    return failure_shares ? (*failure_shares)[static_cast<std::size_t>(c)] : 0.0;
  }
  int total() const {
    int t = 0;
    for (int c : counts) t += c;
    return t;
  }
  int failures() const { return total() - count(OutcomeClass::pass); }
};

inline TaxonomyDistribution aggregate_taxonomy(const std::vector<OutcomeClass>& classes) {
  TaxonomyDistribution dist;
  for (OutcomeClass c : classes) ++dist.counts[static_cast<std::size_t>(c)];
  int failures = dist.failures();
  if (failures > 0) {
    std::array<double, 7> shares{};
    for (std::size_t i = 0; i < shares.size(); ++i) {
      if (kOutcomeClasses[i] == OutcomeClass::pass) continue;
      shares[i] = static_cast<double>(dist.counts[i]) / failures;
    }
    dist.failure_shares = shares;
  }
  return dist;
}

}  // namespace judgekit
