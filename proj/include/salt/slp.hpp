#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "salt/poly.hpp"

namespace salt {

// Exponent-sign discipline of an additive representation.
//   DivisionFree: every exponent is a natural number.
//   Lemma31:      step exponents natural, result exponents any integer.
//   General:      any integer anywhere (rational-function steps).
enum class SlpMode { DivisionFree, Lemma31, General };

std::string to_string(SlpMode mode);

// One addition: Q_j = u * x^alpha * q^gamma + v * x^beta * q^delta,
// where q^gamma ranges over the earlier steps (gamma/delta have length j-1).
struct AddStep {
  Rational u;
  ExponentVector alpha;
  ExponentVector gamma;
  Rational v;
  ExponentVector beta;
  ExponentVector delta;
};

// Result line: c * x^zeta * q^eta.
struct FinalStep {
  Rational c;
  ExponentVector zeta;
  ExponentVector eta;
};

// Straight-line program witnessing an additive-complexity bound. The length
// (number of steps) is the witness; minimality is never attempted.
struct AdditiveRepr {
  int arity = 0;
  std::vector<AddStep> steps;
  FinalStep final;
  SlpMode mode = SlpMode::DivisionFree;

  int length() const { return static_cast<int>(steps.size()); }
};

struct ValidationIssue {
  int step;  // 1-based step index, 0 = result line / global
  std::string message;
};

struct ValidationReport {
  bool valid = true;
  SlpMode declared_mode = SlpMode::DivisionFree;
  int length = 0;
  std::vector<ValidationIssue> issues;
};

ValidationReport slp_validate(const AdditiveRepr& r);

struct DivisionByZero : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SizeCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateDenominator : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidRepresentation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluates the defining equations in order; negative exponents divide.
// Throws DivisionByZero when an intermediate with a negative exponent
// vanishes at x (x is outside the generic locus).
Rational slp_eval(const AdditiveRepr& r, const std::vector<Rational>& x);
double slp_eval(const AdditiveRepr& r, const std::vector<double>& x);

// Evaluates only the steps, returning the intermediate values q_1..q_a.
std::vector<double> slp_eval_steps(const AdditiveRepr& r, const std::vector<double>& x);
std::vector<Rational> slp_eval_steps(const AdditiveRepr& r, const std::vector<Rational>& x);

// num/den expansion; den == 1 for division-free input.
struct Expansion {
  SparsePoly num;
  SparsePoly den;
};

// Expands to polynomials, aborting with SizeCapExceeded if an intermediate
// term count passes the cap (N-exponent SLPs can encode doubly exponential
// polynomials).
Expansion slp_expand(const AdditiveRepr& r, std::size_t size_cap = 1'000'000);

// Division-free expansion; throws InvalidRepresentation when r has any
// negative exponent.
SparsePoly slp_expand_divfree(const AdditiveRepr& r, std::size_t size_cap = 1'000'000);

// Returns length(steps) after validating; this is an upper-bound witness.
int additive_complexity_witness(const AdditiveRepr& r);

// P/Q with both parts division-free.
struct RationalFunctionPair {
  AdditiveRepr num;
  AdditiveRepr den;
};

// Rewrites r so that every step has natural exponents and only the result
// line carries integer exponents, keeping the same length. Implemented by
// common-denominator propagation: each step's numerator keeps the single
// addition, denominators stay monomial and fold into the result line.
AdditiveRepr lemma31_normalize(const AdditiveRepr& r);

// Splits r into division-free numerator and denominator representations
// agreeing with r away from the denominator's zero set. Each side keeps only
// the steps its result monomial transitively references.
RationalFunctionPair quotient_form(const AdditiveRepr& r);

// Chain-of-partial-sums representation: one addition per term beyond the
// first. Always division-free; never minimal.
AdditiveRepr naive_repr(const SparsePoly& p);

// Same program over a larger variable set; variable i becomes i + offset.
AdditiveRepr embed_repr(const AdditiveRepr& r, int new_arity, int offset);

// Line-oriented text format (see README for the grammar).
std::string slp_to_text(const AdditiveRepr& r);
AdditiveRepr slp_from_text(const std::string& text);

}  // namespace salt
