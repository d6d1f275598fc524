#pragma once

// Candidate execution: one fresh subprocess per test, scrubbed environment,
// scratch working directory, wall/memory/output limits. The toolchain is
// configuration; the default drives the python3 interpreter.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <latch>
#include <string>
#include <string_view>
#include <vector>

#include "judgekit/dataset.hpp"
#include "judgekit/detail/subprocess.hpp"
#include "judgekit/detail/thread_pool.hpp"
#include "judgekit/errors.hpp"
#include "judgekit/text.hpp"

namespace judgekit {

struct ExecutionLimits {
  long wall_ms = 5000;                     // per test
  long mem_bytes = 256L * 1024 * 1024;     // RLIMIT_AS
  std::size_t max_output_bytes = 1 << 20;  // capture cap per stream

  void validate() const {
    if (wall_ms <= 0 || mem_bytes <= 0 || max_output_bytes == 0)
      throw config_error("execution limits must be strictly positive");
  }
};

enum class RunStatus { exited_zero, exited_nonzero, killed_timeout, killed_memory };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::exited_zero: return "exited_zero";
    case RunStatus::exited_nonzero: return "exited_nonzero";
    case RunStatus::killed_timeout: return "killed_timeout";
    case RunStatus::killed_memory: return "killed_memory";
  }
  return "?";
}

// Raw per-test run record. duration_ms stays within wall_ms plus scheduler
// slack (500 ms documented bound). matched implies exited_zero with
// non-empty normalized stdout.
struct TestExecution {
  int test_index = 0;
  std::string stdout_text;
  std::string stderr_text;
  bool stdout_truncated = false;
  bool stderr_truncated = false;
  RunStatus status = RunStatus::exited_nonzero;
  long duration_ms = 0;
  bool matched = false;
  std::string scratch_dir;  // removed before run_one returns; kept for audit
};

struct SyntaxReport {
  bool valid = false;
  std::string diagnostic;  // empty exactly when valid
};

// "{file}" in the arg templates is replaced with the candidate source path.
struct Toolchain {
  std::string interpreter = "python3";
  std::vector<std::string> syntax_args = {
      "-c",
      "import ast,sys\n"
      "src=open(sys.argv[1],encoding='utf-8',errors='replace').read()\n"
      "try:\n"
      "    ast.parse(src)\n"
      "except SyntaxError as e:\n"
      "    sys.stderr.write('SyntaxError: %s (line %s)\\n' % (e.msg, e.lineno))\n"
      "    sys.exit(1)\n",
      "{file}"};
  std::vector<std::string> run_args = {"{file}"};
  std::string source_filename = "main.py";
};

enum class ComparePolicy { strict, token };

// Default strict policy: per-line trailing-whitespace and trailing-blank-line
// normalization, then exact equality. Token policy compares the
// whitespace-delimited token sequences.
inline bool compare_output(std::string_view actual, std::string_view expected,
                           ComparePolicy policy = ComparePolicy::strict) {
  if (policy == ComparePolicy::token)
    return whitespace_tokens(actual) == whitespace_tokens(expected);
  return normalize_judged_text(actual) == normalize_judged_text(expected);
}

namespace detail {

inline std::vector<std::string> scrubbed_env(const std::string& tmpdir) {
  // Documented allowlist; everything else (proxies included) is dropped.
  std::vector<std::string> env;
  for (const char* key : {"PATH", "HOME", "LANG"}) {
    if (const char* v = std::getenv(key)) env.push_back(std::string(key) + "=" + v);
  }
  env.push_back("TMPDIR=" + tmpdir);
  return env;
}

inline std::vector<std::string> expand_args(const Toolchain& tc,
                                            const std::vector<std::string>& arg_template,
                                            const std::string& file) {
  std::vector<std::string> argv;
  argv.push_back(tc.interpreter);
  for (std::string a : arg_template) {
    std::size_t at;
    while ((at = a.find("{file}")) != std::string::npos) a.replace(at, 6, file);
    argv.push_back(std::move(a));
  }
  return argv;
}

class ScratchDir {
 public:
  ScratchDir() {
    const char* base = std::getenv("TMPDIR");
    std::string tmpl = std::string(base && *base ? base : "/tmp") + "/judgekit-XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!::mkdtemp(buf.data()))
      throw infra_error(std::string("mkdtemp: ") + std::strerror(errno));
    path_ = buf.data();
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline std::string write_source(const std::string& dir, const std::string& filename,
                                std::string_view source) {
  std::string path = dir + "/" + filename;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw infra_error("cannot write candidate source: " + path);
  out << source;
  out.close();
  if (!out) throw infra_error("short write for candidate source: " + path);
  return path;
}

inline std::string first_nonempty_line(std::string_view text) {
  for (std::string_view line : split_lines(text)) {
    std::string_view t = rstrip_view(line);
    if (!t.empty()) return std::string(t);
  }
  return {};
}

inline void raise_spawn_side_errors(const judgekit::detail::SpawnResult& r,
                                    const Toolchain& tc) {
  if (!r.exec_failed) return;
  std::string why = std::strerror(r.exec_errno);
  switch (r.exec_stage) {
    case 'x':
      throw config_error("toolchain '" + tc.interpreter + "' failed to start: " + why);
    case 'n':
      throw infra_error("network isolation unsupported on this platform: " + why);
    default:
      throw infra_error(std::string("sandbox setup failed (") + r.exec_stage + "): " + why);
  }
}

inline bool looks_memory_killed(const judgekit::detail::SpawnResult& r) {
  if (r.signaled && r.term_signal == SIGKILL && !r.timed_out) return true;  // OOM kill
  if (r.exit_code != 0 || r.signaled) {
    if (r.err.find("MemoryError") != std::string::npos) return true;
    if (r.err.find("bad_alloc") != std::string::npos) return true;
  }
  return false;
}

}  // namespace detail

// Parse-only syntax probe. Never executes the candidate. A missing
// interpreter is a configuration error, not invalid syntax.
inline SyntaxReport check_syntax(std::string_view source, const Toolchain& toolchain) {
  detail::ScratchDir scratch;
  std::string file = detail::write_source(scratch.path(), toolchain.source_filename, source);

  judgekit::detail::SpawnSpec spec;
  spec.argv = detail::expand_args(toolchain, toolchain.syntax_args, file);
  spec.cwd = scratch.path();
  spec.env = detail::scrubbed_env(scratch.path());
  spec.wall_ms = 15000;  // internal cap; parsing is expected to be instant
  spec.max_capture_bytes = 64 * 1024;
  judgekit::detail::SpawnResult r = judgekit::detail::run_process(spec);
  detail::raise_spawn_side_errors(r, toolchain);
  if (r.timed_out) throw infra_error("syntax check timed out");

  SyntaxReport report;
  report.valid = !r.signaled && r.exit_code == 0;
  if (!report.valid) {
    report.diagnostic = detail::first_nonempty_line(r.err);
    if (report.diagnostic.empty())
      report.diagnostic = "syntax check exited with status " + std::to_string(r.exit_code);
  }
  return report;
}

// Runs the candidate once against one test in a fresh scratch directory.
// Caller guarantees the source already passed check_syntax.
inline TestExecution run_one(std::string_view source, const TestCase& test,
                             const ExecutionLimits& limits, const Toolchain& toolchain,
                             ComparePolicy policy = ComparePolicy::strict,
                             int test_index = 0, bool no_network = false) {
  limits.validate();
  detail::ScratchDir scratch;
  std::string file = detail::write_source(scratch.path(), toolchain.source_filename, source);

  judgekit::detail::SpawnSpec spec;
  spec.argv = detail::expand_args(toolchain, toolchain.run_args, file);
  spec.stdin_data = test.input;
  spec.cwd = scratch.path();
  spec.env = detail::scrubbed_env(scratch.path());
  spec.wall_ms = limits.wall_ms;
  spec.mem_bytes = limits.mem_bytes;
  spec.max_capture_bytes = limits.max_output_bytes;
  spec.unshare_network = no_network;
  judgekit::detail::SpawnResult r = judgekit::detail::run_process(spec);
  detail::raise_spawn_side_errors(r, toolchain);

  TestExecution exec;
  exec.test_index = test_index;
  exec.stdout_text = std::move(r.out);
  exec.stderr_text = std::move(r.err);
  exec.stdout_truncated = r.out_truncated;
  exec.stderr_truncated = r.err_truncated;
  exec.duration_ms = r.duration_ms;
  exec.scratch_dir = scratch.path();
  if (r.timed_out) {
    exec.status = RunStatus::killed_timeout;
  } else if (detail::looks_memory_killed(r)) {
    exec.status = RunStatus::killed_memory;
  } else if (!r.signaled && r.exit_code == 0) {
    exec.status = RunStatus::exited_zero;
  } else {
    exec.status = RunStatus::exited_nonzero;
  }
  exec.matched = exec.status == RunStatus::exited_zero &&
                 !normalizes_empty(exec.stdout_text) &&
                 compare_output(exec.stdout_text, test.expected, policy);
  return exec;
}

// One TestExecution per test, in order, each in its own process. Early stop
// (off by default) halts after the first non-matching test. A pool may be
// supplied to run independent tests concurrently.
inline std::vector<TestExecution> run_all(std::string_view source,
                                          const std::vector<TestCase>& tests,
                                          const ExecutionLimits& limits,
                                          const Toolchain& toolchain,
                                          ComparePolicy policy = ComparePolicy::strict,
                                          bool early_stop = false,
                                          judgekit::detail::ThreadPool* pool = nullptr,
                                          bool no_network = false) {
  if (tests.empty())
    throw std::logic_error("run_all requires at least one test (T >= 1)");

  std::vector<TestExecution> runs;
  if (pool && !early_stop && tests.size() > 1) {
    runs.resize(tests.size());
    std::vector<std::exception_ptr> errors(tests.size());
    std::latch done(static_cast<std::ptrdiff_t>(tests.size()));
    for (std::size_t i = 0; i < tests.size(); ++i) {
      pool->submit([&, i] {
        try {
          runs[i] = run_one(source, tests[i], limits, toolchain, policy,
                            static_cast<int>(i), no_network);
        } catch (...) {
          errors[i] = std::current_exception();
        }
        done.count_down();
      });
    }
    done.wait();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
    return runs;
  }

  runs.reserve(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    runs.push_back(run_one(source, tests[i], limits, toolchain, policy,
                           static_cast<int>(i), no_network));
    if (early_stop && !runs.back().matched) break;
  }
  return runs;
}

}  // namespace judgekit
