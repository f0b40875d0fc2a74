#pragma once

#include <string>
#include <string_view>

namespace swapnas {

/// Shortest decimal text that parses back to exactly `v`; integral values
/// keep a trailing ".0" (1.0 -> "1.0", 0.8 -> "0.8", NaN -> "nan").
std::string format_real(double v);

/// Strict full-string double parse; throws ParseError on failure.
double parse_real(std::string_view text);

}  // namespace swapnas
