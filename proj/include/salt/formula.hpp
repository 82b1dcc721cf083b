#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "salt/slp.hpp"

namespace salt {

enum class Rel { Eq, Lt, Gt, Le, Ge };

std::string to_string(Rel rel);
bool is_strict(Rel rel);

// Atom "P rel 0" with P stored in the document's polynomial table.
struct Atom {
  int poly_ref = -1;
  Rel rel = Rel::Eq;
};

struct Formula {
  enum class Kind { Atom, And, Or, Not };
  Kind kind = Kind::Atom;
  Atom atom;                       // Kind::Atom
  std::vector<Formula> children;   // And/Or: >=1, Not: exactly 1

  static Formula make_atom(int poly_ref, Rel rel);
  static Formula make_and(std::vector<Formula> children);
  static Formula make_or(std::vector<Formula> children);
  static Formula make_not(Formula child);
};

struct PolyEntry {
  SparsePoly poly;
  std::optional<AdditiveRepr> repr;  // expands to poly when present
};

// Quantifier-free formula with its polynomial table. When is_family is set
// the last variable is the (strictly positive) parameter of a one-parameter
// family and the document carries a `param > 0` conjunct.
struct FormulaDoc {
  int arity = 0;
  std::vector<PolyEntry> poly_table;
  Formula root;
  bool is_family = false;

  // Index of an equal polynomial, adding it if absent (table stays deduplicated).
  int add_poly(const SparsePoly& p);
  int add_poly(const SparsePoly& p, AdditiveRepr repr);
};

using FamilyDoc = FormulaDoc;

struct FormatRecord {
  // Dense format (s, d, k).
  int s = 0;
  std::optional<int> d;  // nullopt: every referenced polynomial is zero
  int k = 0;
  // Additive format (a, k).
  int a = 0;
  bool divfree = true;    // all counted representations division-free
  bool naive_used = false;  // some polynomial lacked a witness; naive one counted
};

// DSL parser; see README for the grammar. Atoms are `poly REL 0` with
// REL in {=, <, >, <=, >=}; connectives & | !, parentheses.
FormulaDoc parse_formula(const std::string& text, int expected_arity = 0);
std::string serialize_formula(const FormulaDoc& doc);

// JSON document form: arity, polynomial table (terms + optional slp text), AST.
nlohmann::json doc_to_json(const FormulaDoc& doc);
FormulaDoc doc_from_json(const nlohmann::json& j);

// Exact membership x in Reali(doc).
bool eval_formula(const FormulaDoc& doc, const std::vector<Rational>& x);

// Floating membership with equality atoms relaxed to |P(x)| <= tau.
// Inequality atoms are not relaxed. tau = 0 gives plain floating evaluation.
bool eval_formula_relaxed(const FormulaDoc& doc, const std::vector<double>& x, double tau);

FormatRecord measure_format(const FormulaDoc& doc);

// No negations and only weak relations.
bool is_pclosed(const FormulaDoc& doc);

// Replaces every atom whose polynomial is a single term of positive degree
// with an equivalent sign-pattern formula over the bare variables.
FormulaDoc monomial_atom_rewrite(const FormulaDoc& doc);

// Fiber of a family: substitutes the last variable and drops it.
FormulaDoc fix_last_variable(const FormulaDoc& doc, const Rational& value);

// Structural helpers shared by the transforms.
void collect_atoms(const Formula& f, std::vector<const Atom*>& out);
bool formula_equal(const Formula& a, const Formula& b);

}  // namespace salt
