#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "priormvs/error.hpp"

namespace priormvs::io {

struct TextLine {
  std::size_t number = 0;  // 1-based
  std::vector<std::string_view> tokens;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

/// Tokenized non-blank lines with their original line numbers.
inline std::vector<TextLine> tokenized_lines(std::string_view text) {
  std::vector<TextLine> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++number;
    auto tokens = split_tokens(line);
    if (!tokens.empty()) lines.push_back({number, std::move(tokens)});
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return lines;
}

/// Locale-independent parse of a finite floating-point token.
inline std::optional<double> parse_double(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

inline std::optional<std::int64_t> parse_int(std::string_view token) {
  std::int64_t value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

inline double require_double(std::string_view token, std::size_t line) {
  auto v = parse_double(token);
  if (!v) throw ParseError("expected a finite number, found '" + std::string(token) + "'", line);
  return *v;
}

inline std::int64_t require_int(std::string_view token, std::size_t line) {
  auto v = parse_int(token);
  if (!v) throw ParseError("expected an integer, found '" + std::string(token) + "'", line);
  return *v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace priormvs::io
