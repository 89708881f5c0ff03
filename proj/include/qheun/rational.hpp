#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace qheun {

using Rational = mpq_class;

/// Parses "p/s", an integer, or a finite decimal ("0.001", "1e-6") into an
/// exact rational. Throws ParseError with the 1-based column of the problem.
Rational parse_rational(std::string_view text);

/// "p/s", or "p" when the denominator is one.
std::string to_string(const Rational& r);

bool is_integer(const Rational& r);

/// Requires is_integer(r) and a value that fits in a long.
long to_long(const Rational& r);

Rational pow(const Rational& base, int exponent);

double to_double(const Rational& r);

}  // namespace qheun
