#pragma once

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpg {

// Shortest round-trip decimal form of x. Deterministic across runs and
// platforms, unlike ostream formatting with locale or precision state.
// Non-finite values render as "nan", "inf", "-inf".
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, ptr);
}

inline std::string format_bool(bool b) { return b ? "true" : "false"; }

// Comma-separated doubles, e.g. "1,0.9,0.1" -> {1.0, 0.9, 0.1}.
inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("parse_double_list: bad number '" + item + "'");
    }
    while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
    if (pos != item.size())
      throw std::invalid_argument("parse_double_list: bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("parse_double_list: empty list");
  return out;
}

inline std::vector<std::string> split_string(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

}  // namespace dpg
