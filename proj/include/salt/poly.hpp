#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "salt/rational.hpp"

namespace salt {

// Exponent vector over the ambient variables. Entries are natural numbers
// inside SparsePoly; straight-line programs reuse the type with integer
// entries.
using ExponentVector = std::vector<int>;

int total_degree(const ExponentVector& e);

// Graded lexicographic order, used as the canonical term order.
struct GrlexLess {
  bool operator()(const ExponentVector& a, const ExponentVector& b) const;
};

struct ArityMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Exact sparse multivariate polynomial over the rationals.
// Invariants: no zero coefficients are stored; every exponent vector has
// length arity() and nonnegative entries.
class SparsePoly {
 public:
  using TermMap = std::map<ExponentVector, Rational, GrlexLess>;

  explicit SparsePoly(int arity) : arity_(arity) {
    if (arity < 0) throw std::invalid_argument("negative arity");
  }

  static SparsePoly constant(int arity, const Rational& c);
  static SparsePoly variable(int arity, int index);  // index in [0, arity)
  static SparsePoly monomial(int arity, ExponentVector e, const Rational& c);

  int arity() const { return arity_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  bool is_monomial() const { return terms_.size() == 1; }
  std::size_t term_count() const { return terms_.size(); }

  // Max total degree; nullopt is the degree of the zero polynomial.
  std::optional<int> degree() const;

  void add_term(const ExponentVector& e, const Rational& c);

  SparsePoly operator-() const;
  SparsePoly& operator+=(const SparsePoly& o);
  SparsePoly& operator-=(const SparsePoly& o);
  friend SparsePoly operator+(SparsePoly a, const SparsePoly& b) { return a += b; }
  friend SparsePoly operator-(SparsePoly a, const SparsePoly& b) { return a -= b; }
  friend SparsePoly operator*(const SparsePoly& a, const SparsePoly& b);
  SparsePoly scaled(const Rational& c) const;
  SparsePoly pow(int n) const;  // n >= 0

  bool operator==(const SparsePoly& o) const {
    return arity_ == o.arity_ && terms_ == o.terms_;
  }

  Rational eval(const std::vector<Rational>& x) const;
  double eval(const std::vector<double>& x) const;

  SparsePoly derivative(int var) const;

  // Same polynomial viewed in a larger ambient space; variable i becomes
  // variable i + offset.
  SparsePoly embed(int new_arity, int offset) const;

  // Substitutes a value for the last variable (fiber of a family).
  SparsePoly substitute_last(const Rational& value) const;

  std::string to_string() const;

 private:
  int arity_;
  TermMap terms_;
};

// Parses the shared polynomial text syntax: variables x1..xk, exact
// integer/rational/decimal literals, + - * ^ and parentheses.
// If expected_arity is 0 the arity is the largest variable index seen.
// Throws std::invalid_argument with a position message on bad input.
SparsePoly parse_poly(const std::string& text, int expected_arity = 0);

}  // namespace salt
