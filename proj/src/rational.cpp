#include "salt/rational.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace salt {

std::optional<Rational> parse_rational(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::size_t pos = 0;
  bool neg = false;
  if (text[pos] == '+' || text[pos] == '-') {
    neg = text[pos] == '-';
    ++pos;
  }
  if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
    return std::nullopt;

  Int num = 0;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    num = num * 10 + (text[pos] - '0');
    ++pos;
  }

  Int den = 1;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      return std::nullopt;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      num = num * 10 + (text[pos] - '0');
      den *= 10;
      ++pos;
    }
  } else if (pos < text.size() && text[pos] == '/') {
    ++pos;
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      return std::nullopt;
    Int d = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      d = d * 10 + (text[pos] - '0');
      ++pos;
    }
    if (d == 0) return std::nullopt;
    den = d;
  }
  if (pos != text.size()) return std::nullopt;
  Rational q(num, den);
  if (neg) q = -q;
  return q;
}

std::string rational_to_string(const Rational& q) {
  std::string s = numerator(q).str();
  if (denominator(q) != 1) {
    s += '/';
    s += denominator(q).str();
  }
  return s;
}

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite double");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  double m = std::frexp(x, &exp);  // x = m * 2^exp, |m| in [0.5, 1)
  // 53 doublings make the mantissa integral.
  Int mant = static_cast<long long>(std::ldexp(m, 53));
  exp -= 53;
  Rational q(mant);
  if (exp >= 0) {
    q *= Rational(Int(1) << exp);
  } else {
    q /= Rational(Int(1) << -exp);
  }
  return q;
}

}  // namespace salt
