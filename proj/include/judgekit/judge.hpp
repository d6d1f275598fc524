#pragma once

// The full judging path for one (problem, candidate) pair:
// syntax -> execution -> classification -> scans -> staged reward -> combine.

#include <string>
#include <vector>

#include <json.hpp>

#include "judgekit/config.hpp"
#include "judgekit/dataset.hpp"
#include "judgekit/executor.hpp"
#include "judgekit/reward.hpp"
#include "judgekit/security.hpp"
#include "judgekit/taxonomy.hpp"

namespace judgekit {

struct JudgeResult {
  RewardBreakdown breakdown;
  OutcomeClass outcome = OutcomeClass::syntax_error;
  SyntaxReport syntax;
  std::vector<TestExecution> per_test;
  std::vector<SecurityFinding> findings;  // both origins, line order per origin
  int builtin_findings = 0;
  int external_findings = 0;
  FindingOrigin primary_scanner = FindingOrigin::builtin;
};

inline JudgeResult judge(const Problem& problem, const CandidateProgram& candidate,
                         const JudgeConfig& cfg,
                         judgekit::detail::ThreadPool* test_pool = nullptr) {
  if (candidate.problem_id != problem.id)
    throw std::invalid_argument("candidate is attributed to problem '" +
                                candidate.problem_id + "', judging '" + problem.id + "'");
  if (problem.tests.empty())
    throw std::invalid_argument("problem '" + problem.id + "' has no tests");
  cfg.validate();

  JudgeResult res;
  res.syntax = check_syntax(candidate.source, cfg.toolchain);
  if (res.syntax.valid) {
    res.per_test = run_all(candidate.source, problem.tests, cfg.limits, cfg.toolchain,
                           cfg.compare, cfg.early_stop, test_pool, cfg.no_network);
  }
  res.outcome = classify(res.syntax, res.per_test);

  // Static scans apply whether or not the candidate runs.
  if (cfg.scanner == ScannerChoice::builtin || cfg.scanner == ScannerChoice::both) {
    for (SecurityFinding& f : scan_with(cfg.rules, candidate.source))
      res.findings.push_back(std::move(f));
  }
  if (cfg.scanner == ScannerChoice::external || cfg.scanner == ScannerChoice::both) {
    for (SecurityFinding& f : scan_external(candidate.source, cfg.external))
      res.findings.push_back(std::move(f));
  }
  res.primary_scanner = cfg.primary_scanner();
  std::vector<SecurityFinding> primary;
  for (const SecurityFinding& f : res.findings) {
    if (f.origin == FindingOrigin::builtin) ++res.builtin_findings;
    else ++res.external_findings;
    if (f.origin == res.primary_scanner) primary.push_back(f);
  }

  RewardBreakdown& b = res.breakdown;
  b.mode = cfg.mode;
  b.T = static_cast<int>(problem.tests.size());
  b.k = count_passed(res.per_test);
  b.stage = stage_of(res.syntax, res.per_test, cfg.strict_stages);
  b.r_sec = score_security(primary);
  b.r_func = cfg.mode == RewardMode::partial
                 ? r_func_partial(b.stage, b.k, b.T, cfg.stage_scores)
                 : r_func_binary(b.k, b.T);
  b.r = combine(b.r_func, b.r_sec, cfg.weights);
  return res;
}

// --- stable JSON shapes shared by the CLI and the reward server ---

inline nlohmann::json to_json(const RewardBreakdown& b) {
  return {{"stage", to_string(b.stage)}, {"k", b.k},           {"T", b.T},
          {"r_func", b.r_func},          {"r_sec", b.r_sec},   {"r", b.r},
          {"mode", to_string(b.mode)}};
}

inline RewardBreakdown breakdown_from_json(const nlohmann::json& j) {
  RewardBreakdown b;
  auto st = stage_from_string(j.at("stage").get<std::string>());
  if (!st) throw config_error("unknown stage in breakdown");
  b.stage = *st;
  b.k = j.at("k").get<int>();
  b.T = j.at("T").get<int>();
  b.r_func = j.at("r_func").get<double>();
  b.r_sec = j.at("r_sec").get<double>();
  b.r = j.at("r").get<double>();
  b.mode = j.at("mode").get<std::string>() == "binary" ? RewardMode::binary
                                                       : RewardMode::partial;
  return b;
}

inline nlohmann::json to_json(const SecurityFinding& f) {
  return {{"rule_id", f.rule_id},
          {"severity", to_string(f.severity)},
          {"line", f.line},
          {"message", f.message},
          {"origin", to_string(f.origin)}};
}

inline nlohmann::json test_summary_json(const TestExecution& t) {
  return {{"test_index", t.test_index},
          {"status", to_string(t.status)},
          {"matched", t.matched},
          {"duration_ms", t.duration_ms}};
}

inline nlohmann::json to_json(const JudgeResult& res) {
  nlohmann::json findings = nlohmann::json::array();
  for (const SecurityFinding& f : res.findings) findings.push_back(to_json(f));
  nlohmann::json per_test = nlohmann::json::array();
  for (const TestExecution& t : res.per_test) per_test.push_back(test_summary_json(t));
  return {{"breakdown", to_json(res.breakdown)},
          {"outcome", to_string(res.outcome)},
          {"findings", findings},
          {"per_test", per_test},
          {"findings_by_origin",
           {{"builtin", res.builtin_findings}, {"external", res.external_findings}}},
          {"primary_scanner", to_string(res.primary_scanner)}};
}

}  // namespace judgekit
