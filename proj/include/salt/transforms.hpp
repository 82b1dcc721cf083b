#pragma once

#include <string>
#include <utility>
#include <vector>

#include "salt/formula.hpp"

namespace salt {

struct VariableBlock {
  std::string name;
  int offset = 0;
  int size = 0;
};

struct VariableLayout {
  std::vector<VariableBlock> blocks;
  int total = 0;

  void add(const std::string& name, int size);
  const VariableBlock& block(const std::string& name) const;
};

int pair_count(int p);               // C(p+1,2)
int pair_index(int p, int i, int j);  // position of pair (i,j), 0 <= i < j <= p

// ---------------------------------------------------------------------------
// Division-free lift: one fresh variable per SLP step, one trinomial equation
// per step, atoms rewritten to their result monomials.

struct LiftDescriptor {
  int base_arity = 0;
  int lifted_arity = 0;
  std::vector<AdditiveRepr> reprs;   // per referenced polynomial, table order
  std::vector<int> block_offsets;    // first lifted variable of each block
};

std::pair<FormulaDoc, LiftDescriptor> divfree_lift(const FormulaDoc& doc);

std::vector<Rational> lift_point(const LiftDescriptor& d, const std::vector<Rational>& x);
std::vector<double> lift_point(const LiftDescriptor& d, const std::vector<double>& x);

// ---------------------------------------------------------------------------
// Limit family of a single quotient: P^2 <= t(Q^2 - t^N) within the R-ball,
// N = 2 deg(Q) + 1, parameter t appended as the last variable.

FamilyDoc limit_family_single(const SparsePoly& P, const SparsePoly& Q, const Rational& R);

// ---------------------------------------------------------------------------
// Bar construction over an equations-only formula: every F_i = 0 becomes
// Pbar_i^2 - U(Qbar^2 - U^N) <= 0 with Pbar_i = P_i * prod_{j != i} Q_j,
// Qbar = prod_j Q_j, N = 2 deg(Qbar) + 1; per-block ball constraints and
// U > 0 are conjoined (no blocks: no ball conjuncts).

struct QuotientPair {
  SparsePoly P;
  SparsePoly Q;
  std::optional<AdditiveRepr> P_repr;  // division-free witnesses; naive if absent
  std::optional<AdditiveRepr> Q_repr;
};

struct BarBlock {
  int offset = 0;
  int size = 0;
  Rational radius;
};

// quotients run parallel to doc.poly_table; F_i * Q_i == P_i is checked exactly.
FamilyDoc bar_construction(const FormulaDoc& doc, const std::vector<QuotientPair>& quotients,
                           const std::vector<BarBlock>& blocks);

// ---------------------------------------------------------------------------
// Joins over the layout X^0..X^p (k each), T (p+1), A (C(p+1,2)).

enum class JoinKind { Plain, Fibered, Thickened, Diagonal };

struct JoinConstruction {
  FormulaDoc doc;
  VariableLayout layout;
  JoinKind kind = JoinKind::Plain;
  int p = 0;
  int k = 0;
  Rational R2;   // squared join radius
  Rational eps;  // 0 unless thickened
};

JoinConstruction join_formula(const FormulaDoc& base, int p, const Rational& R);
JoinConstruction fibered_join_formula(const FormulaDoc& base, const std::vector<SparsePoly>& f,
                                      int p, const Rational& R);
JoinConstruction thickened_join_formula(const FormulaDoc& base, const std::vector<SparsePoly>& f,
                                        int p, const Rational& R, const Rational& eps);
JoinConstruction thickened_diagonal(const FormulaDoc& base, int p, const Rational& R,
                                    const Rational& eps);

// Shared builder with the radius already squared (the star pipeline joins on
// a sphere of irrational radius). f is ignored for Plain/Diagonal.
JoinConstruction build_join(const FormulaDoc& base, JoinKind kind,
                            const std::vector<SparsePoly>& f, int p, const Rational& R2,
                            const Rational& eps);

// ---------------------------------------------------------------------------
// Dagger: weak inequalities to equations via slack variables, plus the two
// sphere equations U1^2+|X|^2-R^2=0 and U2^2+|V|^2-R'^2=0.

enum class DaggerMode { Corrected, PaperLiteral };

std::string to_string(DaggerMode mode);

struct DaggerResult {
  FormulaDoc doc;  // arity k + slack + 2 (V block, then U1, U2)
  int k = 0;
  int slack = 0;
  Rational R;
  Rational Rp;
  DaggerMode mode = DaggerMode::Corrected;
};

DaggerResult dagger(const FormulaDoc& doc, const Rational& R, const Rational& Rp,
                    DaggerMode mode = DaggerMode::Corrected);

// Default R': 10 R (1 + ceil max slack magnitude over a coarse ball sample).
Rational default_r_prime(const FormulaDoc& doc, const Rational& R);

// ---------------------------------------------------------------------------
// Star: dagger, fibered join over the coordinate projection to the first k
// variables, bar over the equational part, U > 0, ball clauses kept outside.

struct StageTrace {
  std::string stage;
  int arity = 0;
  FormatRecord format;
};

struct StarResult {
  FamilyDoc doc;
  DaggerResult dag;
  JoinConstruction join;
  std::vector<StageTrace> trace;
  std::vector<std::string> notes;  // recorded assumptions
};

StarResult star_formula(const FormulaDoc& doc, int p, const Rational& R, const Rational& Rp,
                        DaggerMode mode = DaggerMode::Corrected);

// ---------------------------------------------------------------------------
// Format predictions.

struct FormatPrediction {
  int p = 0, k = 0, a = 0, s = 0, d = 0;
  int N = 0;
  int M = 0;             // (p+1)(k+a+2) + 2k C(p+1,2)
  int Mprime = 0;        // (p+1)(s+2) + 3 C(p+1,2) + 3
  int degree_bound = 0;  // d+1
  // Per-clause breakdown as in the proof (the clause sums exceed M by
  // C(p+1,2); both are reported).
  int M_omega = 0, M_theta1 = 0, M_theta2 = 0, M_upsilon = 0;
  int Mp_omega = 0, Mp_theta1 = 0, Mp_theta2 = 0, Mp_upsilon = 0;
};

FormatPrediction predict_diagonal_format(int p, int k, int a, int s, int d);

struct StarFormatPrediction {
  int p = 0, k = 0, a = 0;
  long long N = 0;         // (p+1)(2k+a+3) + C(p+1,2)
  long long M_prop = 0;    // coefficient 2 on the binomial term
  long long M_inline = 0;  // coefficient 1 (the in-text derivation)
  long long divfree_M = 0;  // 5 M_prop^2
  long long divfree_N = 0;  // N + 1
};

StarFormatPrediction predict_star_format(int p, int k, int a);

// Division-free additive bound of a barred equations-only formula in k+1
// variables: (k+a)(a+2).
long long bar_divfree_bound(int k, int a);

struct BoundReport {
  bool pass = true;
  FormatRecord measured;
  std::vector<std::string> failures;
};

BoundReport verify_format_bounds(const JoinConstruction& c, const FormatPrediction& pred);

}  // namespace salt
