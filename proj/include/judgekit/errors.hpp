#pragma once

#include <stdexcept>
#include <string>

namespace judgekit {

// Operational failure in the judge itself (scratch dirs, pipes, fork).
// Never conflated with a candidate's failure.
class infra_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or unusable configuration: missing interpreter, missing external
// analyzer, malformed config file, invalid weight combination.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// External analyzer produced a report the adapter cannot parse.
// Carries the raw output head for debugging.
class adapter_error : public std::runtime_error {
 public:
  adapter_error(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_output(std::move(raw)) {}
  std::string raw_output;
};

// Fatal problem/generation file failure (unreadable, top-level malformation).
class load_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace judgekit
