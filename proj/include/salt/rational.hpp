#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace salt {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Parses an integer, fraction ("-3/4") or decimal ("0.005") literal into an
// exact rational. Returns nullopt on malformed input.
std::optional<Rational> parse_rational(const std::string& text);

// Canonical text form: "n" or "n/d" with d > 1.
std::string rational_to_string(const Rational& q);

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

// Exact rational equal to the double (doubles are dyadic rationals).
Rational rational_from_double(double x);

}  // namespace salt
