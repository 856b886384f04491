#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pcbd/error.hpp"

namespace pcbd {

// Shortest decimal text that parses back to exactly the same double.
inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Line reader that tracks 1-based line numbers for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line with at least one token; nullopt at end of input.
  std::optional<std::vector<std::string_view>> next_tokens() {
    while (std::getline(in_, current_)) {
      ++line_;
      auto tokens = split_ws(current_);
      if (!tokens.empty()) return tokens;
    }
    return std::nullopt;
  }

  std::vector<std::string_view> require_tokens(const char* what) {
    auto t = next_tokens();
    if (!t) throw ParseError(line_ + 1, std::string("unexpected end of input, expected ") + what);
    return *t;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::string current_;
  std::size_t line_ = 0;
};

}  // namespace pcbd
