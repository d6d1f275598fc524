#pragma once

// Security findings for candidate source. Two routes: a built-in line-regex
// rule engine with a lexical comment/string suppression pass, and an adapter
// around an external analyzer's machine-readable report. Findings map to a
// penalty score in [0,1].

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "judgekit/detail/subprocess.hpp"
#include "judgekit/errors.hpp"
#include "judgekit/text.hpp"

namespace judgekit {

enum class Severity { low, medium, high };
enum class FindingOrigin { builtin, external };

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::low: return "low";
    case Severity::medium: return "medium";
    case Severity::high: return "high";
  }
  return "?";
}

inline const char* to_string(FindingOrigin o) {
  return o == FindingOrigin::builtin ? "builtin" : "external";
}

inline std::optional<Severity> severity_from_string(std::string_view s) {
  if (s == "low") return Severity::low;
  if (s == "medium") return Severity::medium;
  if (s == "high") return Severity::high;
  return std::nullopt;
}

struct SecurityFinding {
  std::string rule_id;
  Severity severity = Severity::low;
  int line = 1;  // 1-based
  std::string message;
  FindingOrigin origin = FindingOrigin::builtin;
};

struct SecurityRule {
  std::string id;
  std::string pattern;  // ECMAScript regex applied per line
  Severity severity = Severity::low;
  std::string message;
};

struct RuleTable {
  std::string version;
  std::vector<SecurityRule> rules;

  void validate() const {
    std::set<std::string_view> ids;
    for (const SecurityRule& r : rules) {
      if (r.id.empty()) throw config_error("rule with empty id in table " + version);
      if (!ids.insert(r.id).second)
        throw config_error("duplicate rule id '" + r.id + "' in table " + version);
    }
  }
};

inline RuleTable builtin_rules() {
  RuleTable t;
  t.version = "builtin-v1";
  t.rules = {
      {"eval-call", R"(\beval\s*\()", Severity::high, "use of eval()"},
      {"exec-call", R"(\bexec\s*\()", Severity::high, "use of exec()"},
      {"shell-exec", R"(\bshell\s*=\s*True|\bos\.system\s*\(|\bos\.popen\s*\()",
       Severity::high, "shell-string process execution"},
      {"pickle-load", R"(\b(pickle|cPickle)\.loads?\s*\()", Severity::high,
       "unsafe deserialization of pickled data"},
      {"weak-hash", R"(\bhashlib\.(md5|sha1)\s*\()", Severity::medium,
       "weak hash primitive (md5/sha1)"},
      {"yaml-load", R"(\byaml\.load\s*\((?![^)\n]*SafeLoader))", Severity::medium,
       "yaml.load without a safe loader"},
      {"tmp-file", R"(\btempfile\.mktemp\s*\(|\bos\.(tempnam|tmpnam)\s*\()",
       Severity::medium, "predictable temp-file creation"},
      {"assert-auth",
       R"(^\s*assert\b.*\b([Aa]uth|[Aa]dmin|[Aa]ccess|[Pp]ermission|[Rr]ole|[Tt]oken|[Pp]assword|[Uu]ser)\w*\b)",
       Severity::low, "assert used as an access-control check"},
  };
  return t;
}

namespace detail {

// Positions inside '#' comments or string literals, tracked with a small
// lexical pass (single, double, and triple quotes; backslash escapes).
// Match starts landing on masked positions are suppressed.
inline std::vector<char> comment_string_mask(std::string_view src) {
  std::vector<char> mask(src.size(), 0);
  enum class St { code, comment, str } st = St::code;
  std::string_view delim;  // active string delimiter
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    switch (st) {
      case St::code:
        if (c == '#') {
          st = St::comment;
          mask[i] = 1;
        } else if (c == '\'' || c == '"') {
          st = St::str;
          if (src.substr(i, 3) == std::string(3, c)) {
            delim = src.substr(i, 3);
            mask[i] = mask[i + 1] = mask[i + 2] = 1;
            i += 2;
          } else {
            delim = src.substr(i, 1);
            mask[i] = 1;
          }
        }
        break;
      case St::comment:
        if (c == '\n')
          st = St::code;
        else
          mask[i] = 1;
        break;
      case St::str:
        mask[i] = 1;
        if (c == '\\' && i + 1 < src.size()) {
          mask[i + 1] = 1;
          ++i;
        } else if (src.substr(i, delim.size()) == delim) {
          for (std::size_t k = 1; k < delim.size(); ++k) mask[i + k] = 1;
          i += delim.size() - 1;
          st = St::code;
        } else if (c == '\n' && delim.size() == 1) {
          st = St::code;  // unterminated single-line literal
        }
        break;
    }
    ++i;
  }
  return mask;
}

struct CompiledRule {
  const SecurityRule* rule;
  std::regex re;
};

inline std::vector<CompiledRule> compile_rules(const RuleTable& table) {
  table.validate();
  std::vector<CompiledRule> compiled;
  compiled.reserve(table.rules.size());
  for (const SecurityRule& r : table.rules) {
    try {
      compiled.push_back({&r, std::regex(r.pattern)});
    } catch (const std::regex_error& e) {
      throw config_error("bad pattern for rule '" + r.id + "': " + e.what());
    }
  }
  return compiled;
}

inline std::vector<SecurityFinding> scan_compiled(const std::vector<CompiledRule>& rules,
                                                  std::string_view source);

}  // namespace detail

// Applies a rule table line by line; at most one finding per rule per line.
// Findings are reported in ascending line order.
inline std::vector<SecurityFinding> scan_with(const RuleTable& table,
                                              std::string_view source) {
  return detail::scan_compiled(detail::compile_rules(table), source);
}

inline std::vector<SecurityFinding> scan_builtin(std::string_view source) {
  static const std::vector<detail::CompiledRule> compiled = [] {
    static const RuleTable table = builtin_rules();
    return detail::compile_rules(table);
  }();
  return detail::scan_compiled(compiled, source);
}

namespace detail {

inline std::vector<SecurityFinding> scan_compiled(const std::vector<CompiledRule>& rules,
                                                  std::string_view source) {
  std::vector<char> mask = comment_string_mask(source);
  std::vector<SecurityFinding> findings;

  std::size_t offset = 0;
  int lineno = 0;
  for (std::string_view line : split_lines(source)) {
    ++lineno;
    for (const CompiledRule& cr : rules) {
      std::cregex_iterator it(line.data(), line.data() + line.size(), cr.re), end;
      for (; it != end; ++it) {
        std::size_t match_pos = offset + static_cast<std::size_t>(it->position(0));
        if (match_pos < mask.size() && mask[match_pos]) continue;
        findings.push_back({cr.rule->id, cr.rule->severity, lineno, cr.rule->message,
                            FindingOrigin::builtin});
        break;
      }
    }
    offset += line.size() + 1;
  }
  return findings;
}

}  // namespace detail

// Declarative rules file: one JSON record per line with
// {id, pattern, severity, message?}.
inline RuleTable load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open rules file: " + path.string());
  RuleTable table;
  table.version = "file:" + path.filename().string();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (normalizes_empty(line)) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    std::string where = path.filename().string() + ":" + std::to_string(lineno);
    if (rec.is_discarded() || !rec.is_object())
      throw config_error(where + ": rule record is not a JSON object");
    SecurityRule rule;
    if (!rec.contains("id") || !rec["id"].is_string())
      throw config_error(where + ": rule needs a string 'id'");
    rule.id = rec["id"];
    if (!rec.contains("pattern") || !rec["pattern"].is_string())
      throw config_error(where + ": rule needs a string 'pattern'");
    rule.pattern = rec["pattern"];
    if (!rec.contains("severity") || !rec["severity"].is_string())
      throw config_error(where + ": rule needs a string 'severity'");
    auto sev = severity_from_string(rec["severity"].get<std::string>());
    if (!sev) throw config_error(where + ": severity must be low|medium|high");
    rule.severity = *sev;
    rule.message = rec.value("message", "rule " + rule.id);
    table.rules.push_back(std::move(rule));
  }
  table.validate();
  detail::compile_rules(table);  // fail fast on bad patterns
  return table;
}

// External analyzer invocation: `<command> <args...>` with {file} replaced by
// a temp copy of the source, report read from stdout.
struct ExternalScanner {
  std::string command = "bandit";
  std::vector<std::string> args = {"-f", "json", "{file}"};
  std::string source_suffix = ".py";
};

// Severity mapping for the external report: the tool's LOW/MEDIUM/HIGH pass
// through, with per-rule overrides aligning the dynamic-execution rules
// (eval/exec, reported MEDIUM by the analyzer) with the builtin table.
inline Severity map_external_severity(std::string_view tool_severity,
                                      std::string_view test_id) {
  if (test_id == "B307" || test_id == "B102") return Severity::high;
  if (tool_severity == "HIGH") return Severity::high;
  if (tool_severity == "MEDIUM") return Severity::medium;
  return Severity::low;  // LOW and UNDEFINED
}

inline std::vector<SecurityFinding> parse_external_report(const std::string& report_text) {
  nlohmann::json doc = nlohmann::json::parse(report_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("results") ||
      !doc["results"].is_array()) {
    throw adapter_error("unrecognized external analyzer report",
                        report_text.substr(0, 500));
  }
  std::vector<SecurityFinding> findings;
  for (const auto& r : doc["results"]) {
    if (!r.is_object()) continue;
    SecurityFinding f;
    f.origin = FindingOrigin::external;
    f.rule_id = r.value("test_id", std::string("external"));
    f.message = r.value("issue_text", std::string());
    f.line = std::max(1, r.value("line_number", 1));
    f.severity = map_external_severity(r.value("issue_severity", std::string()), f.rule_id);
    findings.push_back(std::move(f));
  }
  std::stable_sort(findings.begin(), findings.end(),
                   [](const SecurityFinding& a, const SecurityFinding& b) {
                     return a.line < b.line;
                   });
  return findings;
}

inline std::vector<SecurityFinding> scan_external(std::string_view source,
                                                  const ExternalScanner& scanner) {
  // Reuse the executor's scratch-dir helper lives elsewhere; a private temp
  // file here keeps this header free of the executor dependency.
  const char* base = std::getenv("TMPDIR");
  std::string tmpl = std::string(base && *base ? base : "/tmp") + "/judgekit-scan-XXXXXX";
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  if (!::mkdtemp(buf.data()))
    throw infra_error(std::string("mkdtemp: ") + std::strerror(errno));
  std::string dir = buf.data();
  struct Cleanup {
    std::string dir;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove_all(dir, ec);
    }
  } cleanup{dir};

  std::string file = dir + "/candidate" + scanner.source_suffix;
  {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw infra_error("cannot write scan input: " + file);
    out << source;
  }

  judgekit::detail::SpawnSpec spec;
  spec.argv.push_back(scanner.command);
  for (std::string a : scanner.args) {
    std::size_t at;
    while ((at = a.find("{file}")) != std::string::npos) a.replace(at, 6, file);
    spec.argv.push_back(std::move(a));
  }
  for (const char* key : {"PATH", "HOME", "LANG"}) {
    if (const char* v = std::getenv(key)) spec.env.push_back(std::string(key) + "=" + v);
  }
  spec.env.push_back("TMPDIR=" + dir);
  spec.wall_ms = 60000;
  spec.max_capture_bytes = 8 << 20;
  judgekit::detail::SpawnResult r = judgekit::detail::run_process(spec);
  if (r.exec_failed)
    throw config_error("external analyzer '" + scanner.command +
                       "' not available: " + std::strerror(r.exec_errno));
  if (r.timed_out) throw adapter_error("external analyzer timed out", r.err);
  // The analyzer signals findings via its exit code; only the report matters.
  return parse_external_report(r.out);
}

inline double severity_weight(Severity s) {
  switch (s) {
    case Severity::high: return 0.6;
    case Severity::medium: return 0.3;
    case Severity::low: return 0.1;
  }
  return 0.0;
}

// R_sec = max(0, 1 - sum of severity weights). No findings scores exactly 1.
inline double score_security(const std::vector<SecurityFinding>& findings) {
  double penalty = 0.0;
  for (const SecurityFinding& f : findings) penalty += severity_weight(f.severity);
  double score = 1.0 - penalty;
  return score < 0.0 ? 0.0 : score;
}

}  // namespace judgekit
