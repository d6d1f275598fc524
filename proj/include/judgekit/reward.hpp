#pragma once

// Reward computation: the staged partial-credit functional score, the strict
// binary variant, and the weighted combination of functional and security
// terms into one scalar.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "judgekit/executor.hpp"
#include "judgekit/text.hpp"

namespace judgekit {

struct RewardWeights {
  double alpha = 0.6;  // functional
  double beta = 0.4;   // security

  void validate() const {
    if (alpha < 0.0 || beta < 0.0)
      throw config_error("reward weights must be non-negative");
    if (std::abs(alpha + beta - 1.0) > 1e-9)
      throw config_error("alpha + beta must equal 1.0");
  }
};

// The five-rung outcome ladder, ordered s0 < s1 < s2 < s3 < s4.
enum class Stage {
  s0_syntax_error,
  s1_valid_syntax,
  s2_runs,
  s3_output,
  s4_tests,
};

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::s0_syntax_error: return "s0_syntax_error";
    case Stage::s1_valid_syntax: return "s1_valid_syntax";
    case Stage::s2_runs: return "s2_runs";
    case Stage::s3_output: return "s3_output";
    case Stage::s4_tests: return "s4_tests";
  }
  return "?";
}

inline std::optional<Stage> stage_from_string(std::string_view s) {
  for (Stage st : {Stage::s0_syntax_error, Stage::s1_valid_syntax, Stage::s2_runs,
                   Stage::s3_output, Stage::s4_tests})
    if (s == to_string(st)) return st;
  return std::nullopt;
}

// Intermediate scores for the s1..s3 rungs; s4 interpolates from the s3
// score up to full credit as the passed-test fraction grows.
struct StageScores {
  double s1 = 0.2;
  double s2 = 0.4;
  double s3 = 0.6;

  void validate() const {
    if (!(0.0 <= s1 && s1 <= s2 && s2 <= s3 && s3 <= 1.0))
      throw config_error("stage scores must satisfy 0 <= s1 <= s2 <= s3 <= 1");
  }
};

enum class RewardMode { partial, binary };

inline const char* to_string(RewardMode m) {
  return m == RewardMode::partial ? "partial" : "binary";
}

struct RewardBreakdown {
  Stage stage = Stage::s0_syntax_error;
  int k = 0;  // tests passed
  int T = 0;  // tests total
  double r_func = 0.0;
  double r_sec = 0.0;
  double r = 0.0;
  RewardMode mode = RewardMode::partial;
};

inline int count_passed(const std::vector<TestExecution>& runs) {
  int k = 0;
  for (const TestExecution& r : runs)
    if (r.matched) ++k;
  return k;
}

// Stage placement. Default (any-test) semantics: one completed run reaches
// s2, one completed run with output reaches s3. With strict_stages every run
// must complete (and emit, for s3). Any passed test is s4 in both modes.
inline Stage stage_of(const SyntaxReport& syntax, const std::vector<TestExecution>& runs,
                      bool strict_stages = false) {
  if (!syntax.valid) return Stage::s0_syntax_error;
  if (runs.empty())
    throw std::logic_error("stage_of: no runs for a syntactically valid candidate");
  if (count_passed(runs) >= 1) return Stage::s4_tests;

  bool all_completed = true, any_completed = false;
  bool all_emitted = true, any_emitted = false;
  for (const TestExecution& r : runs) {
    bool completed = r.status == RunStatus::exited_zero;
    bool emitted = completed && !normalizes_empty(r.stdout_text);
    all_completed = all_completed && completed;
    any_completed = any_completed || completed;
    all_emitted = all_emitted && emitted;
    any_emitted = any_emitted || emitted;
  }
  if (strict_stages) {
    if (all_completed && all_emitted) return Stage::s3_output;
    if (all_completed) return Stage::s2_runs;
    return Stage::s1_valid_syntax;
  }
  if (any_emitted) return Stage::s3_output;
  if (any_completed) return Stage::s2_runs;
  return Stage::s1_valid_syntax;
}

// Score of the s4 rung: s3 base plus the remaining span scaled by k/T.
// Defined for k = 0 too (where it equals the s3 score) so the ladder is
// continuous, although stage_of never produces s4 with k = 0.
inline double stage4_score(int k, int T, const StageScores& scores = {}) {
  return scores.s3 + (1.0 - scores.s3) * static_cast<double>(k) / T;
}

inline void check_counts(int k, int T) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (k < 0 || k > T) throw std::invalid_argument("k must satisfy 0 <= k <= T");
}

inline double r_func_partial(Stage stage, int k, int T, const StageScores& scores = {}) {
  check_counts(k, T);
  scores.validate();
  if ((stage == Stage::s4_tests) != (k >= 1))
    throw std::invalid_argument("stage s4 is reached exactly when k >= 1");
  switch (stage) {
    case Stage::s0_syntax_error: return 0.0;
    case Stage::s1_valid_syntax: return scores.s1;
    case Stage::s2_runs: return scores.s2;
    case Stage::s3_output: return scores.s3;
    case Stage::s4_tests: return stage4_score(k, T, scores);
  }
  throw std::invalid_argument("unknown stage");
}

inline double r_func_binary(int k, int T) {
  check_counts(k, T);
  return static_cast<double>(k) / T;
}

inline double combine(double r_func, double r_sec, const RewardWeights& w = {}) {
  w.validate();
  if (r_func < 0.0 || r_func > 1.0 || r_sec < 0.0 || r_sec > 1.0)
    throw std::invalid_argument("reward components must lie in [0,1]");
  return w.alpha * r_func + w.beta * r_sec;
}

}  // namespace judgekit
