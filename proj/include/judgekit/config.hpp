#pragma once

// One resolved configuration object feeds every judging path (CLI, batch,
// server), so identical inputs always score identically. Precedence is
// handled by the callers: defaults < config file < environment < flags.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "judgekit/errors.hpp"
#include "judgekit/executor.hpp"
#include "judgekit/reward.hpp"
#include "judgekit/security.hpp"

namespace judgekit {

enum class ScannerChoice { builtin, external, both };

inline const char* to_string(ScannerChoice s) {
  switch (s) {
    case ScannerChoice::builtin: return "builtin";
    case ScannerChoice::external: return "external";
    case ScannerChoice::both: return "both";
  }
  return "?";
}

struct JudgeConfig {
  ExecutionLimits limits;
  Toolchain toolchain;
  RewardWeights weights;
  StageScores stage_scores;
  ComparePolicy compare = ComparePolicy::strict;
  RewardMode mode = RewardMode::partial;
  ScannerChoice scanner = ScannerChoice::builtin;
  bool strict_stages = false;
  bool early_stop = false;
  bool no_network = false;
  ExternalScanner external;
  RuleTable rules = builtin_rules();
  int workers = 0;  // 0 = logical CPU count

  // The scorer whose findings define R_sec and "security clean".
  FindingOrigin primary_scanner() const {
    return scanner == ScannerChoice::builtin ? FindingOrigin::builtin
                                             : FindingOrigin::external;
  }

  void validate() const {
    limits.validate();
    weights.validate();
    stage_scores.validate();
    rules.validate();
    if (workers < 0) throw config_error("workers must be >= 0");
  }
};

namespace detail {

template <typename T>
void take(const nlohmann::json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

// Applies a JSON object of settings onto an existing config. Shared by the
// config-file loader and the server's per-request overrides; unknown keys
// are rejected so typos never silently change a judgment.
inline void apply_config_json(JudgeConfig& cfg, const nlohmann::json& obj) {
  if (!obj.is_object()) throw config_error("config document must be a JSON object");
  static const std::set<std::string> known = {
      "wall_ms",     "mem_bytes",     "max_output_bytes", "alpha",
      "beta",        "mode",          "compare",          "scanner",
      "strict_stages", "early_stop",  "no_network",       "stage_scores",
      "toolchain",   "external_scanner", "rules_file",    "workers",
  };
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key()))
      throw config_error("unknown config key '" + it.key() + "'");
  }

  detail::take(obj, "wall_ms", cfg.limits.wall_ms);
  detail::take(obj, "mem_bytes", cfg.limits.mem_bytes);
  detail::take(obj, "max_output_bytes", cfg.limits.max_output_bytes);
  detail::take(obj, "alpha", cfg.weights.alpha);
  detail::take(obj, "beta", cfg.weights.beta);
  detail::take(obj, "strict_stages", cfg.strict_stages);
  detail::take(obj, "early_stop", cfg.early_stop);
  detail::take(obj, "no_network", cfg.no_network);
  detail::take(obj, "workers", cfg.workers);

  if (obj.contains("mode")) {
    std::string m = obj.at("mode").get<std::string>();
    if (m == "partial")
      cfg.mode = RewardMode::partial;
    else if (m == "binary")
      cfg.mode = RewardMode::binary;
    else
      throw config_error("mode must be partial|binary");
  }
  if (obj.contains("compare")) {
    std::string c = obj.at("compare").get<std::string>();
    if (c == "strict")
      cfg.compare = ComparePolicy::strict;
    else if (c == "token")
      cfg.compare = ComparePolicy::token;
    else
      throw config_error("compare must be strict|token");
  }
  if (obj.contains("scanner")) {
    std::string s = obj.at("scanner").get<std::string>();
    if (s == "builtin")
      cfg.scanner = ScannerChoice::builtin;
    else if (s == "external")
      cfg.scanner = ScannerChoice::external;
    else if (s == "both")
      cfg.scanner = ScannerChoice::both;
    else
      throw config_error("scanner must be builtin|external|both");
  }
  if (obj.contains("stage_scores")) {
    const nlohmann::json& s = obj.at("stage_scores");
    detail::take(s, "s1", cfg.stage_scores.s1);
    detail::take(s, "s2", cfg.stage_scores.s2);
    detail::take(s, "s3", cfg.stage_scores.s3);
  }
  if (obj.contains("toolchain")) {
    const nlohmann::json& t = obj.at("toolchain");
    detail::take(t, "interpreter", cfg.toolchain.interpreter);
    detail::take(t, "syntax_args", cfg.toolchain.syntax_args);
    detail::take(t, "run_args", cfg.toolchain.run_args);
    detail::take(t, "source_filename", cfg.toolchain.source_filename);
  }
  if (obj.contains("external_scanner")) {
    const nlohmann::json& e = obj.at("external_scanner");
    detail::take(e, "command", cfg.external.command);
    detail::take(e, "args", cfg.external.args);
    detail::take(e, "source_suffix", cfg.external.source_suffix);
  }
  if (obj.contains("rules_file")) {
    cfg.rules = load_rules(obj.at("rules_file").get<std::string>());
  }
  cfg.validate();
}

inline JudgeConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("malformed config file " + path.string() + ": " + e.what());
  }
  JudgeConfig cfg;
  apply_config_json(cfg, doc);
  return cfg;
}

}  // namespace judgekit
