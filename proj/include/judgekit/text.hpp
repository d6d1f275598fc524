#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace judgekit {

inline bool is_judge_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
}

inline std::string_view rstrip_view(std::string_view s) {
  while (!s.empty() && is_judge_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

// Canonical judge normalization: strip trailing whitespace from every line,
// then strip trailing blank lines. Leading whitespace is significant.
inline std::string normalize_judged_text(std::string_view text) {
  std::vector<std::string_view> lines = split_lines(text);
  while (!lines.empty() && rstrip_view(lines.back()).empty()) lines.pop_back();
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out.append(rstrip_view(lines[i]));
  }
  return out;
}

inline bool normalizes_empty(std::string_view text) {
  for (char c : text) {
    if (!is_judge_space(c) && c != '\n') return false;
  }
  return true;
}

inline std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (is_judge_space(text[i]) || text[i] == '\n')) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_judge_space(text[i]) && text[i] != '\n') ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

}  // namespace judgekit
