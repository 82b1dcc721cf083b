#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "salt/transforms.hpp"

using namespace salt;

namespace {

std::vector<Rational> random_point(std::mt19937_64& rng, int arity, long span = 20) {
  std::uniform_int_distribution<long> num(-span, span);
  std::uniform_int_distribution<long> den(1, 10);
  std::vector<Rational> x(static_cast<std::size_t>(arity));
  for (auto& v : x) v = Rational(num(rng), den(rng));
  return x;
}

FormulaDoc with_naive(FormulaDoc doc) {
  for (auto& e : doc.poly_table)
    if (!e.repr) e.repr = naive_repr(e.poly);
  return doc;
}

const SparsePoly& atom_poly(const FormulaDoc& doc, const Formula& f) {
  REQUIRE(f.kind == Formula::Kind::Atom);
  return doc.poly_table[static_cast<std::size_t>(f.atom.poly_ref)].poly;
}

bool has_poly(const FormulaDoc& doc, const SparsePoly& p) {
  for (const auto& e : doc.poly_table)
    if (e.poly == p) return true;
  return false;
}

AdditiveRepr cube_of_x_plus_1() {
  AdditiveRepr r;
  r.arity = 1;
  r.mode = SlpMode::DivisionFree;
  r.steps.push_back({Rational(1), {1}, {}, Rational(1), {0}, {}});
  r.final = {Rational(1), {0}, {3}};
  return r;
}

}  // namespace

TEST_CASE("pair bookkeeping") {
  CHECK(pair_count(0) == 0);
  CHECK(pair_count(1) == 1);
  CHECK(pair_count(3) == 6);
  CHECK(pair_index(2, 0, 1) == 0);
  CHECK(pair_index(2, 0, 2) == 1);
  CHECK(pair_index(2, 1, 2) == 2);
  int p = 4, next = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j <= p; ++j) CHECK(pair_index(p, i, j) == next++);
  CHECK(next == pair_count(p));
  CHECK_THROWS_AS(pair_index(2, 1, 1), std::invalid_argument);
}

TEST_CASE("division-free lift of (x1+1)^3") {
  FormulaDoc doc(1, {}, Formula::make_atom(0, Rel::Eq), false);
  doc.add_poly(parse_poly("x1^3+3*x1^2+3*x1+1", 1), cube_of_x_plus_1());
  doc.root = Formula::make_atom(0, Rel::Eq);

  auto [lifted, desc] = divfree_lift(doc);
  CHECK(lifted.arity == 2);
  CHECK(desc.base_arity == 1);
  CHECK(desc.lifted_arity == 2);
  REQUIRE(desc.block_offsets == std::vector<int>{1});
  REQUIRE(lifted.root.kind == Formula::Kind::And);
  REQUIRE(lifted.root.children.size() == 2);
  CHECK(atom_poly(lifted, lifted.root.children[0]) == parse_poly("x2-x1-1", 2));
  CHECK(lifted.root.children[0].atom.rel == Rel::Eq);
  CHECK(atom_poly(lifted, lifted.root.children[1]) == parse_poly("x2^3", 2));

  auto lift = lift_point(desc, std::vector<Rational>{Rational(-1)});
  REQUIRE(lift.size() == 2);
  CHECK(lift[1] == Rational(0));
  CHECK(eval_formula(lifted, lift));
}

TEST_CASE("monomial-only doc is unchanged by the lift") {
  FormulaDoc doc = with_naive(parse_formula("5*x1^2*x2 = 0", 2));
  auto [lifted, desc] = divfree_lift(doc);
  CHECK(lifted.arity == 2);
  CHECK(desc.reprs.size() == 1);
  CHECK(desc.reprs[0].length() == 0);
  CHECK(formula_equal(lifted.root, doc.root));
  CHECK(atom_poly(lifted, lifted.root) == doc.poly_table[0].poly);
}

TEST_CASE("lift rejects missing or dividing witnesses") {
  FormulaDoc bare = parse_formula("x1^2-1 = 0", 1);
  CHECK_THROWS_AS(divfree_lift(bare), std::invalid_argument);
  FormulaDoc doc = with_naive(parse_formula("x1^2-1 = 0", 1));
  doc.poly_table[0].repr->mode = SlpMode::General;
  CHECK_THROWS_AS(divfree_lift(doc), std::invalid_argument);
}

TEST_CASE("lift membership agrees with the base on random points") {
  FormulaDoc doc =
      with_naive(parse_formula("x1*(x1^2+x2^2-1) = 0 | x1^2+x2^2-1 <= 0", 2));
  auto [lifted, desc] = divfree_lift(doc);
  std::mt19937_64 rng(71);
  for (int i = 0; i < 200; ++i) {
    auto x = random_point(rng, 2);
    CHECK(eval_formula(doc, x) == eval_formula(lifted, lift_point(desc, x)));
  }
}

TEST_CASE("limit family of the first quotient pair") {
  SparsePoly P = parse_poly("x1^2*(x1^2+x2^2-1)", 2);
  SparsePoly Q = parse_poly("x1", 2);
  FamilyDoc fam = limit_family_single(P, Q, Rational(2));
  CHECK(fam.arity == 3);
  CHECK(fam.is_family);
  REQUIRE(fam.root.kind == Formula::Kind::And);
  REQUIRE(fam.root.children.size() == 3);
  // N = 2 deg(Q) + 1 = 3, so the parameter enters as t^4.
  CHECK(atom_poly(fam, fam.root.children[0]) ==
        parse_poly("x1^4*(x1^2+x2^2-1)^2 - x3*x1^2 + x3^4", 3));
  CHECK(fam.root.children[0].atom.rel == Rel::Le);
  CHECK(atom_poly(fam, fam.root.children[1]) == parse_poly("x1^2+x2^2-4", 3));
  CHECK(atom_poly(fam, fam.root.children[2]) == parse_poly("x3", 3));
  CHECK(fam.root.children[2].atom.rel == Rel::Gt);
  CHECK(measure_format(fam).divfree);
}

TEST_CASE("limit family of the second quotient pair") {
  FamilyDoc fam = limit_family_single(parse_poly("x1*(x1^2+x2^2-1)", 2),
                                      parse_poly("x1", 2), Rational(2));
  CHECK(atom_poly(fam, fam.root.children[0]) ==
        parse_poly("x1^2*(x1^2+x2^2-1)^2 - x3*x1^2 + x3^4", 3));
}

TEST_CASE("limit family with constant denominator") {
  FamilyDoc fam =
      limit_family_single(parse_poly("x1", 1), parse_poly("1", 1), Rational(1));
  // N = 1: P^2 <= t(1 - t).
  CHECK(atom_poly(fam, fam.root.children[0]) == parse_poly("x1^2 - x2 + x2^2", 2));
  CHECK_THROWS_AS(limit_family_single(parse_poly("x1", 1), SparsePoly(1), Rational(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(limit_family_single(parse_poly("x1", 1), parse_poly("1", 1), Rational(0)),
                  std::invalid_argument);
}

TEST_CASE("bar construction of a single equation reduces to the limit family") {
  SparsePoly P = parse_poly("x1^2*(x1^2+x2^2-1)", 2);
  FormulaDoc doc = parse_formula("x1*(x1^2+x2^2-1) = 0", 2);
  std::vector<QuotientPair> quots{{P, parse_poly("x1", 2), std::nullopt, std::nullopt}};
  FamilyDoc bar = bar_construction(doc, quots, {{0, 2, Rational(2)}});
  FamilyDoc fam = limit_family_single(P, parse_poly("x1", 2), Rational(2));
  CHECK(bar.arity == fam.arity);
  CHECK(formula_equal(bar.root, fam.root));
  REQUIRE(bar.poly_table.size() == fam.poly_table.size());
  for (std::size_t i = 0; i < bar.poly_table.size(); ++i) {
    CHECK(bar.poly_table[i].poly == fam.poly_table[i].poly);
    REQUIRE(bar.poly_table[i].repr.has_value());
    CHECK(bar.poly_table[i].repr->length() == fam.poly_table[i].repr->length());
  }
}

TEST_CASE("bar of a disjunction multiplies the denominators") {
  FormulaDoc doc = parse_formula("x1*(x1^2+x2^2-1) = 0 | x1^2+x2^2-1 = 0", 2);
  std::vector<QuotientPair> quots{
      {parse_poly("x1^2*(x1^2+x2^2-1)", 2), parse_poly("x1", 2), std::nullopt, std::nullopt},
      {parse_poly("x1*(x1^2+x2^2-1)", 2), parse_poly("x1", 2), std::nullopt, std::nullopt}};
  FamilyDoc bar = bar_construction(doc, quots, {});
  // Qbar = x1^2, so N = 5 and the parameter enters as t^6.
  CHECK(has_poly(bar, parse_poly("x1^6*(x1^2+x2^2-1)^2 - x3*x1^4 + x3^6", 3)));
  CHECK(has_poly(bar, parse_poly("x1^4*(x1^2+x2^2-1)^2 - x3*x1^4 + x3^6", 3)));
  REQUIRE(bar.root.kind == Formula::Kind::And);
  CHECK(bar.root.children[0].kind == Formula::Kind::Or);

  // (1,0) solves both equations away from the denominator's zero set.
  CHECK(eval_formula(bar, {Rational(1), Rational(0), Rational(1, 10)}));
  CHECK(!eval_formula(bar, {Rational(1, 2), Rational(0), Rational(1, 100)}));
}

TEST_CASE("bar construction rejects bad input") {
  FormulaDoc ineq = parse_formula("x1 <= 0", 1);
  CHECK_THROWS_AS(bar_construction(ineq, {{parse_poly("x1", 1), parse_poly("1", 1),
                                           std::nullopt, std::nullopt}},
                                   {}),
                  std::invalid_argument);
  FormulaDoc neg = parse_formula("!(x1 = 0)", 1);
  CHECK_THROWS_AS(bar_construction(neg, {{parse_poly("x1", 1), parse_poly("1", 1),
                                          std::nullopt, std::nullopt}},
                                   {}),
                  std::invalid_argument);
  FormulaDoc eq = parse_formula("x1 = 0", 1);
  CHECK_THROWS_AS(bar_construction(eq, {{parse_poly("x1+1", 1), parse_poly("1", 1),
                                         std::nullopt, std::nullopt}},
                                   {}),
                  std::invalid_argument);
}

TEST_CASE("join instantiation at p=1, k=1") {
  FormulaDoc base = parse_formula("x1 = 0", 1);
  JoinConstruction c = join_formula(base, 1, Rational(1));
  CHECK(c.doc.arity == 5);
  CHECK(c.layout.total == 5);
  CHECK(c.layout.block("x0").offset == 0);
  CHECK(c.layout.block("x1").offset == 1);
  CHECK(c.layout.block("t").offset == 2);
  CHECK(c.layout.block("a").offset == 4);
  REQUIRE(c.doc.root.kind == Formula::Kind::And);
  CHECK(c.doc.root.children.size() == 7);
  CHECK(has_poly(c.doc, parse_poly("x1^2-1", 5)));
  CHECK(has_poly(c.doc, parse_poly("x2^2-1", 5)));
  CHECK(has_poly(c.doc, parse_poly("x3^2+x4^2-1", 5)));
  CHECK(has_poly(c.doc, parse_poly("x3+x4-1", 5)));
  CHECK(has_poly(c.doc, parse_poly("x5^2", 5)));
  CHECK(has_poly(c.doc, parse_poly("x1", 5)));  // copy-0 instantiation of the base
  CHECK(has_poly(c.doc, parse_poly("x2", 5)));

  CHECK(eval_formula(c.doc, {Rational(0), Rational(0), Rational(1, 2), Rational(1, 2),
                             Rational(0)}));
  CHECK(!eval_formula(c.doc, {Rational(1), Rational(1), Rational(1, 2), Rational(1, 2),
                              Rational(0)}));
}

TEST_CASE("join at p=0 has no pair variables") {
  FormulaDoc base = parse_formula("x1 = 0", 1);
  JoinConstruction c = join_formula(base, 0, Rational(1));
  CHECK(c.doc.arity == 2);
  REQUIRE(c.doc.root.kind == Formula::Kind::And);
  CHECK(c.doc.root.children.size() == 4);
  CHECK(has_poly(c.doc, parse_poly("x2-1", 2)));  // sum of the single t is 1
  CHECK(eval_formula(c.doc, {Rational(0), Rational(1)}));
  CHECK(!eval_formula(c.doc, {Rational(1), Rational(1)}));
}

TEST_CASE("diagonal join points are members exactly when the base point qualifies") {
  FormulaDoc base = parse_formula("x1*(x1^2+x2^2-1) = 0", 2);
  int p = 2;
  JoinConstruction c = join_formula(base, p, Rational(2));
  std::mt19937_64 rng(73);
  for (int i = 0; i < 200; ++i) {
    auto x = random_point(rng, 2, 30);
    std::vector<Rational> pt;
    for (int copy = 0; copy <= p; ++copy) pt.insert(pt.end(), x.begin(), x.end());
    for (int t = 0; t <= p; ++t) pt.push_back(Rational(1, p + 1));
    for (int a = 0; a < pair_count(p); ++a) pt.push_back(Rational(0));
    bool want = eval_formula(base, x) && x[0] * x[0] + x[1] * x[1] <= Rational(4);
    CHECK(eval_formula(c.doc, pt) == want);
  }
}

TEST_CASE("fibered join with a constant map degenerates") {
  FormulaDoc base = parse_formula("x1 = 0", 1);
  std::vector<SparsePoly> f{SparsePoly::constant(1, Rational(1))};
  JoinConstruction fib = fibered_join_formula(base, f, 1, Rational(1));
  CHECK(has_poly(fib.doc, -SparsePoly::variable(5, 4)));  // |f diff|^2 - A = -A
  JoinConstruction plain = join_formula(base, 1, Rational(1));
  std::vector<Rational> ok{Rational(0), Rational(0), Rational(1, 2), Rational(1, 2),
                           Rational(0)};
  std::vector<Rational> off{Rational(0), Rational(0), Rational(1, 2), Rational(1, 2),
                            Rational(1)};
  CHECK(eval_formula(fib.doc, ok));
  CHECK(eval_formula(plain.doc, ok));
  CHECK(!eval_formula(fib.doc, off));
  CHECK(!eval_formula(plain.doc, off));
}

TEST_CASE("fibered join excludes mixed points with distinct fiber values") {
  FormulaDoc base = parse_formula("x2 = 0", 2);
  std::vector<SparsePoly> f{SparsePoly::variable(2, 0)};
  JoinConstruction c = fibered_join_formula(base, f, 1, Rational(10));
  // Copies (1,0) and (2,0) both satisfy the base but project differently.
  std::vector<Rational> pt{Rational(1), Rational(0), Rational(2), Rational(0),
                           Rational(1, 2), Rational(1, 2), Rational(0)};
  CHECK(!eval_formula(c.doc, pt));  // Theta3 wants A = 1
  pt.back() = Rational(1);
  CHECK(!eval_formula(c.doc, pt));  // Theta1 wants A = 0
  // Same fiber value is fine.
  std::vector<Rational> diag{Rational(1), Rational(0), Rational(1), Rational(0),
                             Rational(1, 2), Rational(1, 2), Rational(0)};
  CHECK(eval_formula(c.doc, diag));
}

TEST_CASE("fibered join format arithmetic") {
  FormulaDoc base(2, {}, Formula::make_atom(0, Rel::Eq), false);
  base.add_poly(parse_poly("x1*x2-1", 2), naive_repr(parse_poly("x1*x2-1", 2)));
  base.add_poly(parse_poly("x1^2+x2^2-1", 2), naive_repr(parse_poly("x1^2+x2^2-1", 2)));
  base.root = Formula::make_and(
      {Formula::make_atom(0, Rel::Eq), Formula::make_atom(1, Rel::Eq)});
  std::vector<SparsePoly> f{SparsePoly::variable(2, 0), SparsePoly::variable(2, 1)};
  JoinConstruction c = fibered_join_formula(base, f, 1, Rational(3));
  FormatRecord rec = measure_format(c.doc);
  // Omega 4+2, Theta1 2+0, Theta2 2*3, Theta3 2k per pair.
  CHECK(rec.a == 18);
  CHECK(rec.s == 12);
  CHECK(rec.divfree);
  CHECK(!rec.naive_used);
}

TEST_CASE("thickened join membership is monotone in eps") {
  FormulaDoc base = parse_formula("x1 = 0", 1);
  std::vector<SparsePoly> f{SparsePoly::variable(1, 0)};
  std::vector<Rational> epss{Rational(1, 100), Rational(1, 10), Rational(1)};
  std::vector<JoinConstruction> cs;
  for (const auto& e : epss) cs.push_back(thickened_join_formula(base, f, 2, Rational(1), e));
  std::mt19937_64 rng(79);
  for (int i = 0; i < 200; ++i) {
    auto pt = random_point(rng, cs[0].doc.arity, 3);
    bool prev = eval_formula(cs[0].doc, pt);
    for (std::size_t j = 1; j < cs.size(); ++j) {
      bool cur = eval_formula(cs[j].doc, pt);
      CHECK(!(prev && !cur));
      prev = cur;
    }
  }
  CHECK_THROWS_AS(thickened_join_formula(base, f, 2, Rational(1), Rational(-1)),
                  std::invalid_argument);
}

TEST_CASE("thickened pair sum runs over 1 <= i < j <= p as printed") {
  FormulaDoc base = parse_formula("x1 = 0", 1);
  std::vector<SparsePoly> f{SparsePoly::variable(1, 0)};
  JoinConstruction thick = thickened_join_formula(base, f, 2, Rational(1), Rational(0));
  JoinConstruction fib = fibered_join_formula(base, f, 2, Rational(1));
  // x^0=x^1=x^2=0, t=e_0, A_01=5: the printed eps-sum skips pairs touching copy 0.
  std::vector<Rational> pt{Rational(0), Rational(0), Rational(0), Rational(1),
                           Rational(0), Rational(0), Rational(5), Rational(0),
                           Rational(0)};
  CHECK(eval_formula(thick.doc, pt));
  CHECK(!eval_formula(fib.doc, pt));
  // With all pair variables zero the two agree.
  std::mt19937_64 rng(83);
  for (int i = 0; i < 100; ++i) {
    auto p0 = random_point(rng, 9, 2);
    p0[6] = p0[7] = p0[8] = Rational(0);
    CHECK(eval_formula(thick.doc, p0) == eval_formula(fib.doc, p0));
  }
}

TEST_CASE("thickened diagonal instantiation at p=1, k=1") {
  FormulaDoc base = parse_formula("x1 = 0", 1);
  JoinConstruction c = thickened_diagonal(base, 1, Rational(1), Rational(1));
  CHECK(c.doc.arity == 5);
  REQUIRE(c.doc.root.kind == Formula::Kind::And);
  CHECK(c.doc.root.children.size() == 7);
  CHECK(has_poly(c.doc, parse_poly("(x1-x2)^2 - x5", 5)));
  const Formula& ups = c.doc.root.children.back();
  REQUIRE(ups.kind == Formula::Kind::Or);
  CHECK(ups.children.size() == 3);
  // Diagonal points with A = 0 are admitted whenever the base holds.
  CHECK(eval_formula(c.doc, {Rational(0), Rational(0), Rational(1, 2), Rational(1, 2),
                             Rational(0)}));
  CHECK(!eval_formula(c.doc, {Rational(1, 2), Rational(1, 2), Rational(1, 2),
                              Rational(1, 2), Rational(0)}));
  CHECK_THROWS_AS(thickened_diagonal(base, 0, Rational(1), Rational(1)),
                  std::invalid_argument);
}

TEST_CASE("diagonal format matches the prediction at p=1") {
  FormulaDoc base(2, {}, Formula::make_atom(0, Rel::Eq), false);
  base.add_poly(parse_poly("x1*x2-1", 2), naive_repr(parse_poly("x1*x2-1", 2)));
  base.add_poly(parse_poly("x1^2+x2^2-1", 2), naive_repr(parse_poly("x1^2+x2^2-1", 2)));
  base.root = Formula::make_and(
      {Formula::make_atom(0, Rel::Le), Formula::make_atom(1, Rel::Eq)});
  JoinConstruction c = thickened_diagonal(base, 1, Rational(3), Rational(1, 2));
  FormatPrediction pred = predict_diagonal_format(1, 2, 3, 2, 2);
  BoundReport rep = verify_format_bounds(c, pred);
  CHECK(rep.pass);
  CHECK(rep.failures.empty());
  CHECK(rep.measured.a == 18);
  CHECK(c.doc.arity == 7);

  FormatPrediction bad = pred;
  bad.M -= 1;
  BoundReport neg = verify_format_bounds(c, bad);
  CHECK(!neg.pass);
  REQUIRE(!neg.failures.empty());
  CHECK(neg.failures[0].find("additive") != std::string::npos);
}

TEST_CASE("diagonal format exceeds the stated bound by C(p,2) for p=2") {
  FormulaDoc base(1, {}, Formula::make_atom(0, Rel::Eq), false);
  base.add_poly(parse_poly("x1^2-1", 1), naive_repr(parse_poly("x1^2-1", 1)));
  base.root = Formula::make_atom(0, Rel::Eq);
  JoinConstruction c = thickened_diagonal(base, 2, Rational(3), Rational(1));
  FormatPrediction pred = predict_diagonal_format(2, 1, 1, 1, 2);
  FormatRecord rec = measure_format(c.doc);
  // The proof's per-clause budgets sum to M + C(p+1,2); the eps-sum as printed
  // costs C(p,2) additions, leaving the construction C(p,2) over the statement.
  CHECK(pred.M_omega + pred.M_theta1 + pred.M_theta2 + pred.M_upsilon ==
        pred.M + pair_count(2));
  CHECK(rec.a == pred.M + 1);
  CHECK(!verify_format_bounds(c, pred).pass);
  CHECK(rec.s <= pred.Mprime);
  CHECK(c.doc.arity == pred.N);
}

TEST_CASE("layout dimension is exact on random (p, k) pairs") {
  std::mt19937_64 rng(89);
  std::uniform_int_distribution<int> pd(0, 5), kd(1, 4);
  for (int i = 0; i < 50; ++i) {
    int p = pd(rng), k = kd(rng);
    FormulaDoc base = parse_formula("x1 = 0", k);
    JoinConstruction c = join_formula(base, p, Rational(1));
    CHECK(c.doc.arity == (p + 1) * (k + 1) + pair_count(p));
    CHECK(c.layout.total == c.doc.arity);
  }
}

TEST_CASE("dagger corrected mode on the half line") {
  FormulaDoc doc = parse_formula("x1 <= 0", 1);
  DaggerResult res = dagger(doc, Rational(1), Rational(10));
  CHECK(res.slack == 1);
  CHECK(res.doc.arity == 4);
  REQUIRE(res.doc.root.kind == Formula::Kind::And);
  REQUIRE(res.doc.root.children.size() == 3);
  CHECK(atom_poly(res.doc, res.doc.root.children[0]) == parse_poly("x1 + x2^2", 4));
  CHECK(res.doc.root.children[0].atom.rel == Rel::Eq);
  CHECK(atom_poly(res.doc, res.doc.root.children[1]) == parse_poly("x3^2 + x1^2 - 1", 4));
  CHECK(atom_poly(res.doc, res.doc.root.children[2]) == parse_poly("x4^2 + x2^2 - 100", 4));

  // Every x1 in [-1, 0] lifts onto the slacked surface...
  for (int i = 0; i <= 20; ++i) {
    double x1 = -1.0 + i * 0.05;
    double want = x1 <= 0.0;
    if (!want) continue;
    std::vector<double> pt{x1, std::sqrt(-x1), std::sqrt(1.0 - x1 * x1),
                           std::sqrt(100.0 + x1)};
    CHECK(eval_formula_relaxed(res.doc, pt, 1e-9));
  }
  // ...and no point with x1 > 0 satisfies it for any slack values.
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> u(-11.0, 11.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> pt{0.25, u(rng), u(rng), u(rng)};
    CHECK(!eval_formula_relaxed(res.doc, pt, 1e-9));
  }
}

TEST_CASE("dagger keeps equations and validates its input") {
  FormulaDoc eq = parse_formula("x1 = 0", 1);
  DaggerResult res = dagger(eq, Rational(1), Rational(2));
  CHECK(res.slack == 0);
  CHECK(res.doc.arity == 3);
  CHECK(atom_poly(res.doc, res.doc.root.children[0]) == parse_poly("x1", 3));
  CHECK_THROWS_AS(dagger(parse_formula("x1 < 0", 1), Rational(1), Rational(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(dagger(eq, Rational(2), Rational(1)), std::invalid_argument);
}

TEST_CASE("dagger paper-literal mode flips the half line") {
  FormulaDoc doc = parse_formula("x1 <= 0", 1);
  DaggerResult res = dagger(doc, Rational(1), Rational(10), DaggerMode::PaperLiteral);
  CHECK(atom_poly(res.doc, res.doc.root.children[0]) == parse_poly("x1 - x2^2", 4));
  // A strictly positive x1 projects from the literal surface: the mismatch.
  std::vector<double> pt{0.25, 0.5, std::sqrt(1.0 - 0.0625), std::sqrt(100.0 - 0.25)};
  CHECK(eval_formula_relaxed(res.doc, pt, 1e-9));

  FormulaDoc ge = parse_formula("x1 >= 0", 1);
  DaggerResult lit = dagger(ge, Rational(1), Rational(10), DaggerMode::PaperLiteral);
  CHECK(atom_poly(lit.doc, lit.doc.root.children[0]) == parse_poly("-x1 - x2^2", 4));
  DaggerResult cor = dagger(ge, Rational(1), Rational(10), DaggerMode::Corrected);
  CHECK(atom_poly(cor.doc, cor.doc.root.children[0]) == parse_poly("x1 - x2^2", 4));
}

TEST_CASE("default R' scales with the worst slack on the ball") {
  CHECK(default_r_prime(parse_formula("x1 = 0", 1), Rational(1)) == Rational(10));
  CHECK(default_r_prime(parse_formula("x1 <= 0", 1), Rational(1)) == Rational(20));
}

TEST_CASE("star pipeline on the line") {
  FormulaDoc doc = parse_formula("x1 = 0", 1);
  StarResult res = star_formula(doc, 1, Rational(1), Rational(2));
  REQUIRE(res.trace.size() == 5);
  CHECK(res.trace[0].stage == "input");
  CHECK(res.trace[1].stage == "dagger");
  CHECK(res.trace[2].stage == "join");
  CHECK(res.trace[3].stage == "bar");
  CHECK(res.trace[4].stage == "star");
  CHECK(res.dag.doc.arity == doc.arity + res.dag.slack + 2);
  CHECK(res.dag.slack == 0);
  CHECK(res.join.doc.arity == 2 * 4 + 1);
  CHECK(res.doc.arity == res.join.doc.arity + 1);
  CHECK(res.doc.is_family);
  CHECK(!res.notes.empty());

  const Formula& last = res.doc.root.children.back();
  CHECK(last.kind == Formula::Kind::Atom);
  CHECK(last.atom.rel == Rel::Gt);
  CHECK(atom_poly(res.doc, last) == SparsePoly::variable(res.doc.arity, res.doc.arity - 1));

  FormatRecord rec = measure_format(res.doc);
  StarFormatPrediction pred = predict_star_format(1, 1, 0);
  CHECK(rec.divfree);
  CHECK(rec.a <= pred.divfree_M);
  CHECK(res.doc.arity <= pred.divfree_N);
}

TEST_CASE("star on a segment with genuine inequalities") {
  FormulaDoc doc = parse_formula("x1 <= 0 & x1+1 >= 0", 1);
  Rational rp = default_r_prime(doc, Rational(2));
  StarResult res = star_formula(doc, 1, Rational(2), rp);
  CHECK(res.dag.slack == 2);
  FormatRecord dag = measure_format(res.dag.doc);
  // (6(k+a), 2k+a+2) with k=1, a=1.
  CHECK(dag.a <= 6 * (1 + 1));
  CHECK(res.dag.doc.arity <= 2 * 1 + 1 + 2);
  FormatRecord rec = measure_format(res.doc);
  StarFormatPrediction pred = predict_star_format(1, 1, 1);
  CHECK(rec.divfree);
  CHECK(rec.a <= pred.divfree_M);
}

TEST_CASE("format predictions match the quoted instances") {
  FormatPrediction d1 = predict_diagonal_format(1, 2, 3, 2, 2);
  CHECK(d1.M == 18);
  CHECK(d1.Mprime == 14);
  CHECK(d1.N == 7);
  CHECK(d1.degree_bound == 3);

  FormatPrediction d0 = predict_diagonal_format(0, 3, 2, 4, 1);
  CHECK(d0.M == 3 + 2 + 2);
  CHECK(d0.N == 4);
  CHECK(d0.Mprime == 4 + 5);

  FormatPrediction d2 = predict_diagonal_format(2, 1, 1, 1, 2);
  CHECK(d2.N == 9);
  CHECK(d2.M == 18);
  CHECK(d2.Mprime == 21);

  StarFormatPrediction s2 = predict_star_format(2, 1, 1);
  CHECK(s2.N == 21);
  CHECK(s2.M_prop == 93);
  CHECK(s2.M_inline == 66);
  CHECK(s2.divfree_M == 5 * 93 * 93);
  CHECK(s2.divfree_N == 22);

  StarFormatPrediction s0 = predict_star_format(0, 4, 7);
  CHECK(s0.M_prop == s0.M_inline);

  CHECK(bar_divfree_bound(2, 3) == 25);
}
