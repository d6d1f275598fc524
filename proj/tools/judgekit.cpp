// judgekit command line: single evaluation, batch evaluation, security
// scanning, the reward server, and report rendering/comparison.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <latch>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "judgekit/config.hpp"
#include "judgekit/dataset.hpp"
#include "judgekit/judge.hpp"
#include "judgekit/metrics.hpp"
#include "judgekit/server.hpp"

namespace {

using namespace judgekit;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write file: " + path.string());
  out << content;
  if (!out) throw config_error("short write: " + path.string());
}

// Judge-config knobs shared by the judging subcommands. Resolution order:
// built-in defaults, then --config file, then environment / flags
// (flags win because CLI11 only reads the environment for absent flags).
struct ConfigFlags {
  std::string config_path;
  long wall_ms = 0;
  long mem_bytes = 0;
  std::size_t max_output_bytes = 0;
  double alpha = 0.0, beta = 0.0;
  std::string mode, compare, scanner, interpreter, rules_file, external_cmd;
  bool strict_stages = false, early_stop = false, no_network = false;
  int workers = 0;

  CLI::Option* o_config = nullptr;
  CLI::Option* o_wall = nullptr;
  CLI::Option* o_mem = nullptr;
  CLI::Option* o_maxout = nullptr;
  CLI::Option* o_alpha = nullptr;
  CLI::Option* o_beta = nullptr;
  CLI::Option* o_mode = nullptr;
  CLI::Option* o_compare = nullptr;
  CLI::Option* o_scanner = nullptr;
  CLI::Option* o_interp = nullptr;
  CLI::Option* o_rules = nullptr;
  CLI::Option* o_ext = nullptr;
  CLI::Option* o_strict = nullptr;
  CLI::Option* o_early = nullptr;
  CLI::Option* o_nonet = nullptr;
  CLI::Option* o_workers = nullptr;

  void attach(CLI::App* cmd) {
    o_config = cmd->add_option("--config", config_path, "JSON config file")
                   ->envname("JUDGEKIT_CONFIG");
    o_wall = cmd->add_option("--wall-ms", wall_ms, "wall-clock limit per test (ms)")
                 ->envname("JUDGEKIT_WALL_MS");
    o_mem = cmd->add_option("--mem-bytes", mem_bytes, "address-space cap (bytes)")
                ->envname("JUDGEKIT_MEM_BYTES");
    o_maxout = cmd->add_option("--max-output-bytes", max_output_bytes,
                               "stdout/stderr capture cap (bytes)")
                   ->envname("JUDGEKIT_MAX_OUTPUT_BYTES");
    o_alpha = cmd->add_option("--alpha", alpha, "functional reward weight")
                  ->envname("JUDGEKIT_ALPHA");
    o_beta = cmd->add_option("--beta", beta, "security reward weight")
                 ->envname("JUDGEKIT_BETA");
    o_mode = cmd->add_option("--mode", mode, "reward mode: partial|binary")
                 ->envname("JUDGEKIT_MODE");
    o_compare = cmd->add_option("--compare", compare, "output comparison: strict|token")
                    ->envname("JUDGEKIT_COMPARE");
    o_scanner = cmd->add_option("--scanner", scanner, "scanner: builtin|external|both")
                    ->envname("JUDGEKIT_SCANNER");
    o_interp = cmd->add_option("--toolchain", interpreter, "interpreter command")
                   ->envname("JUDGEKIT_TOOLCHAIN");
    o_rules = cmd->add_option("--rules", rules_file, "builtin rule table file (JSONL)")
                  ->envname("JUDGEKIT_RULES");
    o_ext = cmd->add_option("--external-cmd", external_cmd, "external analyzer command")
                ->envname("JUDGEKIT_EXTERNAL_CMD");
    o_strict = cmd->add_flag("--strict-stages", strict_stages,
                             "stage credit requires every test run")
                   ->envname("JUDGEKIT_STRICT_STAGES");
    o_early = cmd->add_flag("--early-stop", early_stop, "stop after first failing test")
                  ->envname("JUDGEKIT_EARLY_STOP");
    o_nonet = cmd->add_flag("--no-network", no_network,
                            "isolate candidate from the network (needs kernel support)")
                  ->envname("JUDGEKIT_NO_NETWORK");
    o_workers = cmd->add_option("--workers", workers, "judging worker pool size")
                    ->envname("JUDGEKIT_WORKERS");
  }

  JudgeConfig resolve() const {
    JudgeConfig cfg;
    if (o_config->count()) cfg = load_config_file(config_path);
    nlohmann::json over = nlohmann::json::object();
    if (o_wall->count()) over["wall_ms"] = wall_ms;
    if (o_mem->count()) over["mem_bytes"] = mem_bytes;
    if (o_maxout->count()) over["max_output_bytes"] = max_output_bytes;
    if (o_alpha->count()) over["alpha"] = alpha;
    if (o_beta->count()) over["beta"] = beta;
    // Setting one weight implies the complement, so a single flag stays valid.
    if (o_alpha->count() && !o_beta->count()) over["beta"] = 1.0 - alpha;
    if (o_beta->count() && !o_alpha->count()) over["alpha"] = 1.0 - beta;
    if (o_mode->count()) over["mode"] = mode;
    if (o_compare->count()) over["compare"] = compare;
    if (o_scanner->count()) over["scanner"] = scanner;
    if (o_strict->count()) over["strict_stages"] = strict_stages;
    if (o_early->count()) over["early_stop"] = early_stop;
    if (o_nonet->count()) over["no_network"] = no_network;
    if (o_workers->count()) over["workers"] = workers;
    if (o_interp->count()) over["toolchain"] = {{"interpreter", interpreter}};
    if (o_ext->count()) over["external_scanner"] = {{"command", external_cmd}};
    if (o_rules->count()) over["rules_file"] = rules_file;
    apply_config_json(cfg, over);
    return cfg;
  }
};

ProblemFormat parse_problem_format(const std::string& s) {
  if (s == "canonical") return ProblemFormat::canonical;
  if (s == "appsplus") return ProblemFormat::appsplus;
  throw config_error("problem format must be canonical|appsplus");
}

void print_diagnostics(const LoadDiagnostics& diag, const char* what) {
  if (diag.skipped > 0)
    std::cerr << what << ": " << diag.loaded << " loaded, " << diag.skipped
              << " skipped\n";
  for (const std::string& m : diag.messages) std::cerr << "  " << m << "\n";
}

std::string render_result_text(const JudgeResult& res) {
  char buf[128];
  std::string out;
  out += "stage        " + std::string(to_string(res.breakdown.stage)) + "\n";
  out += "tests        " + std::to_string(res.breakdown.k) + "/" +
         std::to_string(res.breakdown.T) + " passed\n";
  out += "outcome      " + std::string(to_string(res.outcome)) + "\n";
  std::snprintf(buf, sizeof(buf), "r_func       %.4f\nr_sec        %.4f\nr            %.4f\n",
                res.breakdown.r_func, res.breakdown.r_sec, res.breakdown.r);
  out += buf;
  out += "mode         " + std::string(to_string(res.breakdown.mode)) + "\n";
  if (!res.syntax.valid) out += "syntax       " + res.syntax.diagnostic + "\n";
  for (const TestExecution& t : res.per_test) {
    std::snprintf(buf, sizeof(buf), "test #%-3d    %s%s (%ld ms)\n", t.test_index,
                  to_string(t.status), t.matched ? ", matched" : "", t.duration_ms);
    out += buf;
  }
  if (res.findings.empty()) {
    out += "findings     none\n";
  } else {
    for (const SecurityFinding& f : res.findings) {
      out += "finding      line " + std::to_string(f.line) + " [" +
             to_string(f.severity) + "] " + f.rule_id + ": " + f.message + " (" +
             to_string(f.origin) + ")\n";
    }
  }
  return out;
}

// --- eval ---

struct EvalArgs {
  ConfigFlags cfg;
  std::string code_path, problems_path, problem_id, problems_format = "canonical";
  std::vector<std::string> inputs, expecteds;
  std::string format = "text", out_path;
};

int run_eval(const EvalArgs& a) {
  JudgeConfig cfg = a.cfg.resolve();
  Problem problem;
  if (!a.problems_path.empty()) {
    if (a.problem_id.empty()) throw config_error("--problems requires --id");
    ProblemSet set = load_problems(a.problems_path, parse_problem_format(a.problems_format));
    const Problem* p = set.find(a.problem_id);
    if (!p) throw config_error("problem '" + a.problem_id + "' not found in " +
                               a.problems_path);
    problem = *p;
  } else {
    if (a.inputs.empty() || a.inputs.size() != a.expecteds.size())
      throw config_error("inline tests need matching --input/--expected pairs");
    problem.id = "inline";
    problem.statement = "(inline tests)";
    for (std::size_t i = 0; i < a.inputs.size(); ++i)
      problem.tests.push_back({a.inputs[i], a.expecteds[i]});
  }

  CandidateProgram candidate;
  candidate.problem_id = problem.id;
  candidate.raw = read_file(a.code_path);
  candidate.source = extract_code(candidate.raw);

  JudgeResult res = judge(problem, candidate, cfg);
  std::string rendered = a.format == "json" ? to_json(res).dump(2) + "\n"
                                            : render_result_text(res);
  if (a.out_path.empty())
    std::cout << rendered;
  else
    write_file(a.out_path, rendered);
  return 0;  // the reward value never drives the exit code
}

// --- batch ---

struct BatchArgs {
  ConfigFlags cfg;
  std::string problems_path, generations_path, problems_format = "canonical";
  std::string out_path, records_path;
  bool table = false;
};

int run_batch(const BatchArgs& a) {
  JudgeConfig cfg = a.cfg.resolve();
  ProblemSet problems = load_problems(a.problems_path,
                                      parse_problem_format(a.problems_format));
  print_diagnostics(problems.diag, "problems");
  GenerationSet gens = load_generations(a.generations_path);
  print_diagnostics(gens.diag, "generations");

  struct Pair {
    const Problem* problem;
    const CandidateProgram* candidate;
    std::string label;
  };
  std::vector<Pair> pairs;
  int unmatched = 0;
  for (std::size_t i = 0; i < gens.candidates.size(); ++i) {
    const CandidateProgram& c = gens.candidates[i];
    const Problem* p = problems.find(c.problem_id);
    if (!p) {
      ++unmatched;
      continue;
    }
    pairs.push_back({p, &c, c.problem_id + "#" + std::to_string(i)});
  }
  if (unmatched > 0)
    std::cerr << "generations: " << unmatched << " with no matching problem\n";
  if (pairs.empty())
    throw config_error("no (problem, candidate) pairs to judge");

  std::size_t workers = cfg.workers > 0
                            ? static_cast<std::size_t>(cfg.workers)
                            : judgekit::detail::ThreadPool::default_workers();
  std::vector<JudgeResult> results(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  {
    judgekit::detail::ThreadPool pool(workers);
    std::latch done(static_cast<std::ptrdiff_t>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      pool.submit([&, i] {
        try {
          results[i] = judge(*pairs[i].problem, *pairs[i].candidate, cfg);
        } catch (...) {
          errors[i] = std::current_exception();
        }
        done.count_down();
      });
    }
    done.wait();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<EvalRecord> records;
  records.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    records.push_back(make_record(pairs[i].problem->id, pairs[i].label, results[i]));

  BatchReport report = aggregate(records);
  std::string json_text = render_report(report, ReportFormat::json);
  if (a.out_path.empty())
    std::cout << json_text;
  else
    write_file(a.out_path, json_text);
  if (a.table) std::cout << render_report(report, ReportFormat::text);

  if (!a.records_path.empty()) {
    std::string dump;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      nlohmann::json j = to_json(results[i]);
      j["problem_id"] = pairs[i].problem->id;
      j["candidate"] = pairs[i].label;
      dump += j.dump() + "\n";
    }
    write_file(a.records_path, dump);
  }
  return 0;
}

// --- scan ---

struct ScanArgs {
  ConfigFlags cfg;
  std::string code_path;
  std::string format = "text";
};

int run_scan(const ScanArgs& a) {
  JudgeConfig cfg = a.cfg.resolve();
  std::string source = extract_code(read_file(a.code_path));

  std::vector<SecurityFinding> findings;
  if (cfg.scanner == ScannerChoice::builtin || cfg.scanner == ScannerChoice::both)
    for (SecurityFinding& f : scan_with(cfg.rules, source)) findings.push_back(std::move(f));
  if (cfg.scanner == ScannerChoice::external || cfg.scanner == ScannerChoice::both)
    for (SecurityFinding& f : scan_external(source, cfg.external))
      findings.push_back(std::move(f));

  int builtin_count = 0, external_count = 0;
  std::vector<SecurityFinding> primary;
  for (const SecurityFinding& f : findings) {
    (f.origin == FindingOrigin::builtin ? builtin_count : external_count)++;
    if (f.origin == cfg.primary_scanner()) primary.push_back(f);
  }
  double r_sec = score_security(primary);

  if (a.format == "json") {
    nlohmann::json j = {{"findings", nlohmann::json::array()},
                        {"r_sec", r_sec},
                        {"findings_by_origin",
                         {{"builtin", builtin_count}, {"external", external_count}}},
                        {"primary_scanner", to_string(cfg.primary_scanner())}};
    for (const SecurityFinding& f : findings) j["findings"].push_back(to_json(f));
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  if (findings.empty()) {
    std::cout << "no findings\n";
  } else {
    for (const SecurityFinding& f : findings)
      std::cout << "line " << f.line << " [" << to_string(f.severity) << "] " << f.rule_id
                << ": " << f.message << " (" << to_string(f.origin) << ")\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "r_sec %.4f\n", r_sec);
  std::cout << buf;
  return 0;
}

// --- serve ---

struct ServeArgs {
  ConfigFlags cfg;
  std::string transport = "stdio";
  int port = 7601;
  std::string problems_path, problems_format = "canonical";
  int queue = 0;
};

int run_serve(const ServeArgs& a) {
  JudgeConfig cfg = a.cfg.resolve();
  ProblemSet problems;
  bool have_problems = !a.problems_path.empty();
  if (have_problems) {
    problems = load_problems(a.problems_path, parse_problem_format(a.problems_format));
    print_diagnostics(problems.diag, "problems");
  }
  const ProblemSet* pset = have_problems ? &problems : nullptr;
  if (a.transport == "stdio") {
    RewardServer server(pset, cfg, cfg.workers, a.queue);
    server.serve(std::cin, std::cout);
    return 0;
  }
  if (a.transport == "tcp") {
    serve_tcp(a.port, pset, cfg, cfg.workers, a.queue);
    return 0;
  }
  throw config_error("transport must be stdio|tcp");
}

// --- report ---

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string format = "text";
  std::string names;
};

int run_report_render(const ReportArgs& a) {
  BatchReport rep = parse_report(read_file(a.inputs.at(0)));
  ReportFormat fmt = a.format == "json"  ? ReportFormat::json
                     : a.format == "csv" ? ReportFormat::csv
                                         : ReportFormat::text;
  std::cout << render_report(rep, fmt);
  return 0;
}

int run_report_compare(const ReportArgs& a) {
  std::vector<std::string> names;
  if (!a.names.empty()) {
    std::stringstream ss(a.names);
    std::string n;
    while (std::getline(ss, n, ',')) names.push_back(n);
  }
  std::vector<std::pair<std::string, BatchReport>> runs;
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    std::string name = i < names.size()
                           ? names[i]
                           : std::filesystem::path(a.inputs[i]).stem().string();
    runs.emplace_back(name, parse_report(read_file(a.inputs[i])));
  }
  ReportFormat fmt = a.format == "csv" ? ReportFormat::csv : ReportFormat::text;
  std::cout << compare_runs(runs, fmt);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"judgekit: sandboxed stdin/stdout code judge with staged rewards"};
  app.require_subcommand(1);

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "judge one candidate program");
  eval_args.cfg.attach(eval_cmd);
  eval_cmd->add_option("--code", eval_args.code_path, "candidate source file")
      ->required()
      ->envname("JUDGEKIT_CODE");
  eval_cmd->add_option("--problems", eval_args.problems_path, "problem file")
      ->envname("JUDGEKIT_PROBLEMS");
  eval_cmd->add_option("--id", eval_args.problem_id, "problem id within --problems")
      ->envname("JUDGEKIT_ID");
  eval_cmd->add_option("--problems-format", eval_args.problems_format,
                       "problem file format: canonical|appsplus")
      ->envname("JUDGEKIT_PROBLEMS_FORMAT");
  eval_cmd->add_option("--input", eval_args.inputs, "inline test stdin (repeatable)");
  eval_cmd->add_option("--expected", eval_args.expecteds,
                       "inline expected stdout (repeatable)");
  eval_cmd->add_option("--format", eval_args.format, "output format: text|json")
      ->envname("JUDGEKIT_FORMAT");
  eval_cmd->add_option("--out", eval_args.out_path, "write output to file")
      ->envname("JUDGEKIT_OUT");

  BatchArgs batch_args;
  CLI::App* batch_cmd = app.add_subcommand("batch", "judge a generations corpus");
  batch_args.cfg.attach(batch_cmd);
  batch_cmd->add_option("--problems", batch_args.problems_path, "problem file")
      ->required()
      ->envname("JUDGEKIT_PROBLEMS");
  batch_cmd->add_option("--generations", batch_args.generations_path,
                        "generations dir or JSONL file")
      ->required()
      ->envname("JUDGEKIT_GENERATIONS");
  batch_cmd->add_option("--problems-format", batch_args.problems_format,
                        "problem file format: canonical|appsplus")
      ->envname("JUDGEKIT_PROBLEMS_FORMAT");
  batch_cmd->add_option("--out", batch_args.out_path, "report output path (JSON)")
      ->envname("JUDGEKIT_OUT");
  batch_cmd->add_option("--records", batch_args.records_path,
                        "per-candidate audit dump path (JSONL)")
      ->envname("JUDGEKIT_RECORDS");
  batch_cmd->add_flag("--table", batch_args.table, "also print the text table");

  ScanArgs scan_args;
  CLI::App* scan_cmd = app.add_subcommand("scan", "security-scan a source file");
  scan_args.cfg.attach(scan_cmd);
  scan_cmd->add_option("--code", scan_args.code_path, "source file")
      ->required()
      ->envname("JUDGEKIT_CODE");
  scan_cmd->add_option("--format", scan_args.format, "output format: text|json")
      ->envname("JUDGEKIT_FORMAT");

  ServeArgs serve_args;
  CLI::App* serve_cmd = app.add_subcommand("serve", "run the reward server");
  serve_args.cfg.attach(serve_cmd);
  serve_cmd->add_option("--transport", serve_args.transport, "stdio|tcp")
      ->envname("JUDGEKIT_TRANSPORT");
  serve_cmd->add_option("--port", serve_args.port, "TCP port (loopback)")
      ->envname("JUDGEKIT_PORT");
  serve_cmd->add_option("--problems", serve_args.problems_path,
                        "preload problems for problem_ref requests")
      ->envname("JUDGEKIT_PROBLEMS");
  serve_cmd->add_option("--problems-format", serve_args.problems_format,
                        "problem file format: canonical|appsplus")
      ->envname("JUDGEKIT_PROBLEMS_FORMAT");
  serve_cmd->add_option("--queue", serve_args.queue, "request queue bound")
      ->envname("JUDGEKIT_QUEUE");

  ReportArgs render_args, compare_args;
  CLI::App* report_cmd = app.add_subcommand("report", "render or compare saved reports");
  report_cmd->require_subcommand(1);
  CLI::App* render_cmd = report_cmd->add_subcommand("render", "render one report");
  render_cmd->add_option("--in", render_args.inputs, "report JSON file")
      ->required()
      ->expected(1);
  render_cmd->add_option("--format", render_args.format, "text|json|csv")
      ->envname("JUDGEKIT_FORMAT");
  CLI::App* compare_cmd = report_cmd->add_subcommand("compare", "compare two or more reports");
  compare_cmd->add_option("--in", compare_args.inputs, "report JSON files (repeat)")
      ->required()
      ->expected(2, -1);
  compare_cmd->add_option("--names", compare_args.names, "comma-separated run names");
  compare_cmd->add_option("--format", compare_args.format, "text|csv")
      ->envname("JUDGEKIT_FORMAT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (batch_cmd->parsed()) return run_batch(batch_args);
    if (scan_cmd->parsed()) return run_scan(scan_args);
    if (serve_cmd->parsed()) return run_serve(serve_args);
    if (report_cmd->parsed()) {
      if (render_cmd->parsed()) return run_report_render(render_args);
      if (compare_cmd->parsed()) return run_report_compare(compare_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "judgekit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
