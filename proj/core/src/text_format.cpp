#include "swapnas/text_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "swapnas/errors.hpp"

namespace swapnas {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

double parse_real(std::string_view text) {
  const std::string s(text);
  if (s == "nan") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError("not a number: '" + s + "'");
  return v;
}

}  // namespace swapnas
