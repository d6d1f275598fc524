#pragma once

// Problem and candidate ingestion: canonical JSONL problem files, the
// APPS+-style single-document adapter, and raw model-output extraction.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "judgekit/errors.hpp"
#include "judgekit/text.hpp"

namespace judgekit {

struct TestCase {
  std::string input;
  std::string expected;
};

struct Problem {
  std::string id;
  std::string statement;
  std::vector<TestCase> tests;  // T >= 1 guaranteed after loading
  std::string difficulty;      // optional label, empty when absent
};

struct CandidateProgram {
  std::string problem_id;
  std::string raw;     // verbatim model output
  std::string source;  // extracted code (substring of raw)
};

enum class ProblemFormat { canonical, appsplus };

struct LoadDiagnostics {
  int loaded = 0;
  int skipped = 0;
  std::vector<std::string> messages;

  void skip(std::string msg) {
    ++skipped;
    if (messages.size() < 200) messages.push_back(std::move(msg));
  }
};

struct ProblemSet {
  std::vector<Problem> problems;
  LoadDiagnostics diag;

  const Problem* find(std::string_view id) const {
    for (const Problem& p : problems)
      if (p.id == id) return &p;
    return nullptr;
  }
};

struct GenerationSet {
  std::vector<CandidateProgram> candidates;
  LoadDiagnostics diag;
};

// Returns the contents of the longest ``` fenced block (language tag on the
// opening fence allowed, fences recognized at line starts after indentation).
// An unterminated final fence counts as a block running to end of input.
// With no fence at all, the raw text is returned unchanged.
inline std::string extract_code(std::string_view raw) {
  struct Block {
    std::size_t begin, end;
  };
  std::vector<Block> blocks;
  std::size_t pos = 0;
  bool in_block = false;
  std::size_t block_begin = 0;
  while (pos <= raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    std::size_t line_end = nl == std::string_view::npos ? raw.size() : nl;
    std::string_view line = raw.substr(pos, line_end - pos);
    std::string_view stripped = line;
    while (!stripped.empty() && (stripped.front() == ' ' || stripped.front() == '\t'))
      stripped.remove_prefix(1);
    if (stripped.substr(0, 3) == "```") {
      if (!in_block) {
        in_block = true;
        block_begin = line_end < raw.size() ? line_end + 1 : raw.size();
      } else {
        blocks.push_back({block_begin, pos});
        in_block = false;
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (in_block) blocks.push_back({block_begin, raw.size()});
  if (blocks.empty()) return std::string(raw);
  const Block* best = &blocks[0];
  for (const Block& b : blocks)
    if (b.end - b.begin > best->end - best->begin) best = &b;
  std::size_t len = best->end > best->begin ? best->end - best->begin : 0;
  std::string_view body = raw.substr(best->begin, len);
  if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  return std::string(body);
}

namespace detail {

inline bool any_expected_nonempty(const std::vector<TestCase>& tests) {
  return std::any_of(tests.begin(), tests.end(), [](const TestCase& t) {
    return !normalizes_empty(t.expected);
  });
}

inline std::string json_to_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// APPS+ records carry tests under input_output, sometimes as a nested
// object and sometimes as a JSON-encoded string of one.
inline bool appsplus_tests(const nlohmann::json& record, std::vector<TestCase>& out,
                           std::string& why) {
  if (!record.contains("input_output")) {
    why = "missing input_output";
    return false;
  }
  nlohmann::json io = record["input_output"];
  if (io.is_string()) {
    io = nlohmann::json::parse(io.get<std::string>(), nullptr, false);
    if (io.is_discarded()) {
      why = "input_output string is not valid JSON";
      return false;
    }
  }
  if (!io.is_object() || !io.contains("inputs") || !io.contains("outputs")) {
    why = "input_output lacks inputs/outputs";
    return false;
  }
  auto as_list = [](const nlohmann::json& v) {
    std::vector<std::string> items;
    if (v.is_array()) {
      for (const auto& e : v) items.push_back(json_to_text(e));
    } else {
      items.push_back(json_to_text(v));
    }
    return items;
  };
  std::vector<std::string> inputs = as_list(io["inputs"]);
  std::vector<std::string> outputs = as_list(io["outputs"]);
  std::size_t n = std::min(inputs.size(), outputs.size());
  out.clear();
  for (std::size_t i = 0; i < n; ++i) out.push_back({inputs[i], outputs[i]});
  if (out.empty()) {
    why = "zero test pairs";
    return false;
  }
  return true;
}

inline bool problem_acceptable(const Problem& p, std::string& why) {
  if (p.id.empty()) {
    why = "empty id";
    return false;
  }
  if (p.statement.empty()) {
    why = "missing statement";
    return false;
  }
  if (p.tests.empty()) {
    why = "zero tests";
    return false;
  }
  if (!any_expected_nonempty(p.tests)) {
    why = "every expected output normalizes to empty";
    return false;
  }
  return true;
}

}  // namespace detail

inline ProblemSet load_problems(const std::filesystem::path& path, ProblemFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw load_error("cannot open problem file: " + path.string());
  ProblemSet set;
  std::map<std::string, bool> seen;

  auto admit = [&](Problem p, const std::string& where) {
    std::string why;
    if (!detail::problem_acceptable(p, why)) {
      set.diag.skip(where + ": " + why);
      return;
    }
    if (seen.count(p.id)) {
      set.diag.skip(where + ": duplicate id '" + p.id + "'");
      return;
    }
    seen[p.id] = true;
    ++set.diag.loaded;
    set.problems.push_back(std::move(p));
  };

  if (format == ProblemFormat::canonical) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (normalizes_empty(line)) continue;
      std::string where = "line " + std::to_string(lineno);
      nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) {
        set.diag.skip(where + ": not a JSON object");
        continue;
      }
      Problem p;
      if (rec.contains("id") && rec["id"].is_string()) p.id = rec["id"];
      if (rec.contains("statement") && rec["statement"].is_string())
        p.statement = rec["statement"];
      if (rec.contains("difficulty") && rec["difficulty"].is_string())
        p.difficulty = rec["difficulty"];
      if (rec.contains("tests") && rec["tests"].is_array()) {
        for (const auto& t : rec["tests"]) {
          if (t.is_object() && t.contains("input") && t.contains("expected") &&
              t["input"].is_string() && t["expected"].is_string()) {
            p.tests.push_back({t["input"], t["expected"]});
          }
        }
      }
      admit(std::move(p), where);
    }
    return set;
  }

  // APPS+ adapter: a single JSON document, either an array of records or an
  // object keyed by problem id.
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw load_error("malformed APPS+ document in " + path.string() + ": " + e.what());
  }
  auto convert = [&](const std::string& key, const nlohmann::json& rec) {
    std::string where = key.empty() ? "record" : "record '" + key + "'";
    if (!rec.is_object()) {
      set.diag.skip(where + ": not an object");
      return;
    }
    Problem p;
    if (rec.contains("id") && rec["id"].is_string()) {
      p.id = rec["id"];
    } else if (rec.contains("problem_id")) {
      p.id = detail::json_to_text(rec["problem_id"]);
    } else {
      p.id = key;
    }
    if (rec.contains("question") && rec["question"].is_string())
      p.statement = rec["question"];
    if (rec.contains("difficulty") && rec["difficulty"].is_string())
      p.difficulty = rec["difficulty"];
    std::string why;
    if (!detail::appsplus_tests(rec, p.tests, why)) {
      set.diag.skip(where + ": " + why);
      return;
    }
    admit(std::move(p), where);
  };
  if (doc.is_array()) {
    int idx = 0;
    for (const auto& rec : doc) convert(std::to_string(idx++), rec);
  } else if (doc.is_object()) {
    for (auto it = doc.begin(); it != doc.end(); ++it) convert(it.key(), it.value());
  } else {
    throw load_error("APPS+ document is neither an array nor an object: " + path.string());
  }
  return set;
}

// Generations come either as a directory of <problem_id>.txt files or as a
// JSONL file with {problem_id, raw} records. Extraction runs at load time.
inline GenerationSet load_generations(const std::filesystem::path& path) {
  GenerationSet set;
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      if (!in) {
        set.diag.skip(f.string() + ": unreadable");
        continue;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      CandidateProgram c;
      c.problem_id = f.stem().string();
      c.raw = buf.str();
      c.source = extract_code(c.raw);
      ++set.diag.loaded;
      set.candidates.push_back(std::move(c));
    }
    if (set.candidates.empty())
      set.diag.messages.push_back("warning: no .txt generations under " + path.string());
    return set;
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw load_error("cannot open generations: " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (normalizes_empty(line)) continue;
    std::string where = "line " + std::to_string(lineno);
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      set.diag.skip(where + ": not a JSON object");
      continue;
    }
    if (!rec.contains("problem_id") || !rec["problem_id"].is_string() ||
        rec["problem_id"].get<std::string>().empty()) {
      set.diag.skip(where + ": missing problem_id");
      continue;
    }
    if (!rec.contains("raw") || !rec["raw"].is_string()) {
      set.diag.skip(where + ": missing raw");
      continue;
    }
    CandidateProgram c;
    c.problem_id = rec["problem_id"];
    c.raw = rec["raw"];
    c.source = extract_code(c.raw);
    ++set.diag.loaded;
    set.candidates.push_back(std::move(c));
  }
  if (set.candidates.empty())
    set.diag.messages.push_back("warning: no generation records in " + path.string());
  return set;
}

}  // namespace judgekit
