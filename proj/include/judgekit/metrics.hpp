#pragma once

// Corpus-level aggregation over per-candidate judgments, plus the three
// report renderers (text table, machine-readable JSON, CSV) and the
// side-by-side comparison table.

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "judgekit/judge.hpp"
#include "judgekit/taxonomy.hpp"

namespace judgekit {

struct EvalRecord {
  std::string problem_id;
  std::string candidate;  // label: file stem or record index
  RewardBreakdown breakdown;
  OutcomeClass outcome = OutcomeClass::syntax_error;
  int builtin_findings = 0;
  int external_findings = 0;
  FindingOrigin primary_scanner = FindingOrigin::builtin;

  int primary_findings() const {
    return primary_scanner == FindingOrigin::builtin ? builtin_findings
                                                     : external_findings;
  }
};

inline EvalRecord make_record(std::string problem_id, std::string candidate,
                              const JudgeResult& res) {
  EvalRecord rec;
  rec.problem_id = std::move(problem_id);
  rec.candidate = std::move(candidate);
  rec.breakdown = res.breakdown;
  rec.outcome = res.outcome;
  rec.builtin_findings = res.builtin_findings;
  rec.external_findings = res.external_findings;
  rec.primary_scanner = res.primary_scanner;
  return rec;
}

inline constexpr const char* kReportSchema = "judgekit-report/1";

struct BatchReport {
  int n = 0;
  double syntax_valid_pct = 0.0;    // stage >= s1
  double any_test_pass_pct = 0.0;   // k >= 1
  double all_tests_pass_pct = 0.0;  // k == T
  double security_clean_pct = 0.0;  // zero findings from the primary scanner
  double mean_r_func = 0.0;
  double mean_r_sec = 0.0;
  double mean_r = 0.0;
  std::string primary_scanner = "builtin";
  TaxonomyDistribution taxonomy;
};

inline BatchReport aggregate(const std::vector<EvalRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("aggregate: empty record list");
  BatchReport rep;
  rep.n = static_cast<int>(records.size());
  int syntax_ok = 0, any_pass = 0, all_pass = 0, clean = 0;
  std::vector<OutcomeClass> classes;
  classes.reserve(records.size());
  for (const EvalRecord& r : records) {
    if (r.breakdown.stage != Stage::s0_syntax_error) ++syntax_ok;
    if (r.breakdown.k >= 1) ++any_pass;
    if (r.breakdown.k == r.breakdown.T) ++all_pass;
    if (r.primary_findings() == 0) ++clean;
    rep.mean_r_func += r.breakdown.r_func;
    rep.mean_r_sec += r.breakdown.r_sec;
    rep.mean_r += r.breakdown.r;
    classes.push_back(r.outcome);
  }
  double n = rep.n;
  rep.syntax_valid_pct = 100.0 * syntax_ok / n;
  rep.any_test_pass_pct = 100.0 * any_pass / n;
  rep.all_tests_pass_pct = 100.0 * all_pass / n;
  rep.security_clean_pct = 100.0 * clean / n;
  rep.mean_r_func /= n;
  rep.mean_r_sec /= n;
  rep.mean_r /= n;
  rep.primary_scanner = to_string(records.front().primary_scanner);
  rep.taxonomy = aggregate_taxonomy(classes);
  return rep;
}

enum class ReportFormat { text, json, csv };

namespace detail {

inline std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

inline std::string pct1(double v) { return fixed(v, 1); }
inline std::string mean2(double v) { return fixed(v, 2); }

}  // namespace detail

inline nlohmann::json to_json(const TaxonomyDistribution& d) {
  nlohmann::json counts = nlohmann::json::object();
  for (OutcomeClass c : kOutcomeClasses) counts[to_string(c)] = d.count(c);
  nlohmann::json shares;
  if (d.failure_shares) {
    shares = nlohmann::json::object();
    for (OutcomeClass c : kOutcomeClasses) {
      if (c == OutcomeClass::pass) continue;
      shares[to_string(c)] = d.share(c);
    }
  } else {
    shares = nullptr;
  }
  return {{"counts", counts}, {"failure_shares", shares}};
}

inline nlohmann::json to_json(const BatchReport& r) {
  return {{"schema", kReportSchema},
          {"n", r.n},
          {"syntax_valid_pct", r.syntax_valid_pct},
          {"any_test_pass_pct", r.any_test_pass_pct},
          {"all_tests_pass_pct", r.all_tests_pass_pct},
          {"security_clean_pct", r.security_clean_pct},
          {"mean_r_func", r.mean_r_func},
          {"mean_r_sec", r.mean_r_sec},
          {"mean_r", r.mean_r},
          {"primary_scanner", r.primary_scanner},
          {"taxonomy", to_json(r.taxonomy)}};
}

inline BatchReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", std::string()) != kReportSchema)
    throw load_error("not a judgekit report (schema tag missing or unknown)");
  BatchReport r;
  r.n = j.at("n").get<int>();
  r.syntax_valid_pct = j.at("syntax_valid_pct").get<double>();
  r.any_test_pass_pct = j.at("any_test_pass_pct").get<double>();
  r.all_tests_pass_pct = j.at("all_tests_pass_pct").get<double>();
  r.security_clean_pct = j.at("security_clean_pct").get<double>();
  r.mean_r_func = j.at("mean_r_func").get<double>();
  r.mean_r_sec = j.at("mean_r_sec").get<double>();
  r.mean_r = j.at("mean_r").get<double>();
  r.primary_scanner = j.at("primary_scanner").get<std::string>();
  const nlohmann::json& tax = j.at("taxonomy");
  const nlohmann::json& counts = tax.at("counts");
  for (std::size_t i = 0; i < kOutcomeClasses.size(); ++i)
    r.taxonomy.counts[i] = counts.at(to_string(kOutcomeClasses[i])).get<int>();
  if (!tax.at("failure_shares").is_null()) {
    std::array<double, 7> shares{};
    for (std::size_t i = 0; i < kOutcomeClasses.size(); ++i) {
      if (kOutcomeClasses[i] == OutcomeClass::pass) continue;
      shares[i] = tax.at("failure_shares").at(to_string(kOutcomeClasses[i])).get<double>();
    }
    r.taxonomy.failure_shares = shares;
  }
  return r;
}

inline BatchReport parse_report(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw load_error("report is not valid JSON");
  return report_from_json(doc);
}

// Percentages print with one decimal, means with two.
inline std::string render_report(const BatchReport& r, ReportFormat format) {
  using detail::mean2;
  using detail::pct1;
  if (format == ReportFormat::json) {
    return to_json(r).dump(2) + "\n";
  }
  if (format == ReportFormat::csv) {
    std::string out =
        "n,syntax_valid_pct,any_test_pass_pct,all_tests_pass_pct,"
        "security_clean_pct,mean_r_func,mean_r_sec,mean_r\n";
    out += std::to_string(r.n) + "," + pct1(r.syntax_valid_pct) + "," +
           pct1(r.any_test_pass_pct) + "," + pct1(r.all_tests_pass_pct) + "," +
           pct1(r.security_clean_pct) + "," + mean2(r.mean_r_func) + "," +
           mean2(r.mean_r_sec) + "," + mean2(r.mean_r) + "\n";
    return out;
  }
  std::string out;
  out += "candidates        " + std::to_string(r.n) + "\n";
  out += "syntax valid      " + pct1(r.syntax_valid_pct) + "%\n";
  out += ">=1 test pass     " + pct1(r.any_test_pass_pct) + "%\n";
  out += "all tests pass    " + pct1(r.all_tests_pass_pct) + "%\n";
  out += "security clean    " + pct1(r.security_clean_pct) + "%  (" +
         r.primary_scanner + " scanner)\n";
  out += "mean R_func       " + mean2(r.mean_r_func) + "\n";
  out += "mean R_sec        " + mean2(r.mean_r_sec) + "\n";
  out += "mean R            " + mean2(r.mean_r) + "\n";
  if (r.taxonomy.failures() > 0) {
    out += "failures          ";
    bool first = true;
    for (OutcomeClass c : kOutcomeClasses) {
      if (c == OutcomeClass::pass || r.taxonomy.count(c) == 0) continue;
      if (!first) out += ", ";
      first = false;
      out += std::string(to_string(c)) + " " + pct1(100.0 * r.taxonomy.share(c)) + "% (" +
             std::to_string(r.taxonomy.count(c)) + ")";
    }
    out += "\n";
  }
  return out;
}

// Side-by-side comparison of named reports; the best value in each column is
// marked with '*' when it is unique.
inline std::string compare_runs(const std::vector<std::pair<std::string, BatchReport>>& runs,
                                ReportFormat format = ReportFormat::text) {
  if (runs.size() < 2)
    throw std::invalid_argument("compare_runs needs at least two reports");
  using detail::mean2;
  using detail::pct1;

  struct Col {
    const char* name;
    double (*get)(const BatchReport&);
    bool percent;
  };
  static const Col cols[] = {
      {"syntax%", [](const BatchReport& r) { return r.syntax_valid_pct; }, true},
      {">=1 test pass%", [](const BatchReport& r) { return r.any_test_pass_pct; }, true},
      {"security%", [](const BatchReport& r) { return r.security_clean_pct; }, true},
      {"mean R", [](const BatchReport& r) { return r.mean_r; }, false},
  };

  std::array<double, 4> best{};
  std::array<int, 4> best_count{};
  for (std::size_t c = 0; c < 4; ++c) {
    for (const auto& [name, rep] : runs) {
      double v = cols[c].get(rep);
      if (best_count[c] == 0 || v > best[c]) {
        best[c] = v;
        best_count[c] = 1;
      } else if (v == best[c]) {
        ++best_count[c];
      }
    }
  }

  if (format == ReportFormat::csv) {
    std::string out = "name,syntax_valid_pct,any_test_pass_pct,security_clean_pct,mean_r\n";
    for (const auto& [name, rep] : runs) {
      out += name + "," + pct1(rep.syntax_valid_pct) + "," + pct1(rep.any_test_pass_pct) +
             "," + pct1(rep.security_clean_pct) + "," + mean2(rep.mean_r) + "\n";
    }
    return out;
  }

  std::size_t name_w = 4;
  for (const auto& [name, rep] : runs) name_w = std::max(name_w, name.size());
  auto pad = [](std::string s, std::size_t w) {
    while (s.size() < w) s.push_back(' ');
    return s;
  };
  std::string out = pad("name", name_w + 2);
  for (const Col& c : cols) out += pad(c.name, 17);
  out += "\n";
  for (const auto& [name, rep] : runs) {
    out += pad(name, name_w + 2);
    for (std::size_t c = 0; c < 4; ++c) {
      double v = cols[c].get(rep);
      std::string cell = cols[c].percent ? pct1(v) : mean2(v);
      if (v == best[c] && best_count[c] == 1) cell += " *";
      out += pad(cell, 17);
    }
    out += "\n";
  }
  return out;
}

}  // namespace judgekit
