#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace certbench {

using Rational = mpq_class;

/// Parses "3", "-0.25", ".5", "1e-3", "3/20" exactly. Throws Error on bad input.
Rational parse_rational(std::string_view text);

/// Exact text form: a finite decimal when the denominator allows it, "p/q" otherwise.
std::string to_string(const Rational& value);

/// Nearest double (ties to even), unlike mpq_get_d which truncates.
double to_double(const Rational& value);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Rational equal to the shortest decimal form of `value` (0.15 -> 3/20).
Rational decimal_rational(double value);

}  // namespace certbench
