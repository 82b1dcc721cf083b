// Acceptance gate: one PASS/FAIL line per criterion, exit 0 iff all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "salt/verifier.hpp"

using namespace salt;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- shared random helpers -------------------------------------------------

Rational nonzero_coef(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coef(-5, 5);
  int c = 0;
  while (c == 0) c = coef(rng);
  return Rational(c);
}

AdditiveRepr random_slp(std::mt19937_64& rng, int arity, int steps, bool allow_negative) {
  std::uniform_int_distribution<int> var_exp(allow_negative ? -2 : 0, 2);
  std::uniform_int_distribution<int> step_exp(allow_negative ? -1 : 0, 1);
  AdditiveRepr r;
  r.arity = arity;
  r.mode = allow_negative ? SlpMode::General : SlpMode::DivisionFree;
  for (int j = 0; j < steps; ++j) {
    AddStep s;
    s.u = nonzero_coef(rng);
    s.v = nonzero_coef(rng);
    s.alpha.resize(arity);
    s.beta.resize(arity);
    for (int& e : s.alpha) e = var_exp(rng);
    for (int& e : s.beta) e = var_exp(rng);
    s.gamma.resize(j);
    s.delta.resize(j);
    for (int& e : s.gamma) e = step_exp(rng);
    for (int& e : s.delta) e = step_exp(rng);
    r.steps.push_back(std::move(s));
  }
  r.final.c = nonzero_coef(rng);
  r.final.zeta.resize(arity);
  for (int& e : r.final.zeta) e = var_exp(rng);
  r.final.eta.resize(steps);
  for (int& e : r.final.eta) e = step_exp(rng);
  return r;
}

AdditiveRepr random_nondegenerate_slp(std::mt19937_64& rng, int arity, int steps) {
  for (;;) {
    AdditiveRepr r = random_slp(rng, arity, steps, true);
    try {
      slp_expand(r);
      return r;
    } catch (const DegenerateDenominator&) {
    } catch (const SizeCapExceeded&) {
    }
  }
}

std::vector<Rational> generic_point(std::mt19937_64& rng, int arity) {
  std::uniform_int_distribution<long long> num(1, (1LL << 32) - 1);
  std::vector<Rational> x(arity);
  for (auto& v : x) v = Rational(num(rng), num(rng));
  return x;
}

// Q1 = X^5 - 1; Q2 = X - 1; result Q1 * Q2^-1 (geometric sum).
AdditiveRepr geometric_sum() {
  AdditiveRepr r;
  r.arity = 1;
  r.mode = SlpMode::General;
  r.steps.push_back({Rational(1), {5}, {}, Rational(-1), {0}, {}});
  r.steps.push_back({Rational(1), {1}, {0}, Rational(-1), {0}, {0}});
  r.final = {Rational(1), {0}, {1, -1}};
  return r;
}

std::vector<SparsePoly> first_coordinate_map(int k) {
  std::vector<SparsePoly> f(k, SparsePoly(k));
  f[0] = SparsePoly::variable(k, 0);
  return f;
}

// --- criterion 1: figure rerun --------------------------------------------

Verdict figure_rerun() {
  auto start = std::chrono::steady_clock::now();
  std::vector<Rational> schedule = {Rational(1, 10), Rational(1, 20), Rational(1, 100),
                                    Rational(1, 200)};
  struct Pair {
    const char* P;
    const char* target;
  };
  std::vector<Pair> pairs = {
      {"x1^2*(x1^2+x2^2-1)", "x1*(x1^2+x2^2-1) = 0 & x1^2+x2^2-4 <= 0"},
      {"x1*(x1^2+x2^2-1)", "x1^2+x2^2-1 = 0 & x1^2+x2^2-4 <= 0"},
  };
  bool ok = true;
  std::ostringstream detail;
  for (const Pair& pr : pairs) {
    FamilyDoc family =
        limit_family_single(parse_poly(pr.P, 2), parse_poly("x1", 2), Rational(2));
    FormulaDoc target = parse_formula(pr.target, 2);
    ConvergenceReport rep = limit_convergence_check(family, target, schedule,
                                                    Box::cube(-2, 2, 2), 401, {}, 3.0, 1);
    ok = ok && rep.pass;
    detail << " [final d=" << rep.steps.back().d_sym << (rep.pass ? " ok" : " FAIL") << "]";
  }
  double elapsed = seconds_since(start);
  detail << " " << elapsed << "s";
  if (elapsed > 60.0) ok = false;
  return {ok, detail.str()};
}

// --- criterion 2: closed-form slab -----------------------------------------

Verdict slab_closed_form() {
  FamilyDoc family = limit_family_single(parse_poly("x1", 2), parse_poly("1", 2), Rational(2));
  std::vector<Rational> schedule = {Rational(1, 10), Rational(1, 20), Rational(1, 100)};
  ConvergenceReport rep = limit_convergence_check(family, parse_formula("x1 = 0", 2), schedule,
                                                  Box::cube(-2, 2, 2), 101, 1e-9);
  bool ok = rep.pass;
  std::ostringstream detail;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    double t = to_double(schedule[i]);
    double width = std::sqrt(t * (1.0 - t));
    double err = std::abs(rep.steps[i].d_sym - width);
    if (err > rep.grid_step + 1e-12) ok = false;
    detail << " |d-w|=" << err;
  }
  return {ok, detail.str()};
}

// --- criterion 3: diagonal format dominance --------------------------------

Verdict format_dominance() {
  std::mt19937_64 rng(2024);
  int violations = 0;
  std::ostringstream detail;
  for (int trial = 0; trial < 50; ++trial) {
    int p = 1 + static_cast<int>(rng() % 3);
    int k = 1 + static_cast<int>(rng() % 3);
    int s = 1 + static_cast<int>(rng() % 3);
    int extra_budget = static_cast<int>(rng() % 5);  // total additions <= 4

    FormulaDoc doc;
    doc.arity = k;
    std::vector<Formula> atoms;
    std::uniform_int_distribution<int> exp_pick(0, 2);
    for (int i = 0; i < s; ++i) {
      SparsePoly poly(k);
      int terms = 1 + std::min<int>(extra_budget, static_cast<int>(rng() % 3));
      extra_budget -= terms - 1;
      for (int t = 0; t < terms || poly.is_zero(); ++t) {
        ExponentVector e(k, 0);
        int budget = 4;
        for (int v = 0; v < k; ++v) {
          e[v] = std::min(budget, exp_pick(rng));
          budget -= e[v];
        }
        if (poly.is_constant() && total_degree(e) == 0) e[0] = 1;
        poly.add_term(e, nonzero_coef(rng));
      }
      int ref = doc.add_poly(poly, naive_repr(poly));
      Rel rel = std::vector<Rel>{Rel::Le, Rel::Ge, Rel::Eq}[rng() % 3];
      atoms.push_back(Formula::make_atom(ref, rel));
    }
    doc.root = Formula::make_and(std::move(atoms));

    FormatRecord rec = measure_format(doc);
    JoinConstruction c = thickened_diagonal(doc, p, Rational(6), Rational(1, 7));
    FormatPrediction pred =
        predict_diagonal_format(p, k, rec.a, rec.s, rec.d.value_or(0));
    BoundReport rep = verify_format_bounds(c, pred);
    if (c.doc.arity != pred.N) ++violations;
    if (!rep.pass) {
      ++violations;
      if (violations <= 3)
        detail << " [p=" << p << " k=" << k << ": " << rep.failures.front()
               << " (measured a=" << rep.measured.a << ", M=" << pred.M << ")]";
    }
  }
  detail << " violations=" << violations;
  return {violations == 0, detail.str()};
}

// --- criterion 4: quotient reduction ---------------------------------------

Verdict quotient_reduction() {
  std::mt19937_64 rng(77);
  int length_violations = 0, invalid = 0, disagreements = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int arity = 1 + static_cast<int>(rng() % 3);
    int steps = 1 + static_cast<int>(rng() % 5);
    AdditiveRepr r = random_nondegenerate_slp(rng, arity, steps);
    RationalFunctionPair pair = quotient_form(r);
    if (!slp_validate(pair.num).valid || !slp_validate(pair.den).valid) {
      ++invalid;
      continue;
    }
    // The two halves are standalone programs; steps referenced by both sides
    // are counted once per side here.
    if (pair.num.length() + pair.den.length() > r.length()) ++length_violations;
    int done = 0, guard = 0;
    while (done < 100 && guard < 2000) {
      ++guard;
      auto x = generic_point(rng, arity);
      try {
        Rational d = slp_eval(pair.den, x);
        if (d == 0) continue;
        if (slp_eval(r, x) != slp_eval(pair.num, x) / d) {
          ++disagreements;
          break;
        }
      } catch (const DivisionByZero&) {
        continue;
      }
      ++done;
    }
    if (guard >= 2000 && done < 100) ++disagreements;
  }
  RationalFunctionPair example = quotient_form(geometric_sum());
  int total = example.num.length() + example.den.length();
  std::ostringstream detail;
  detail << " length violations=" << length_violations << " (shared steps double-counted)"
         << ", invalid programs=" << invalid << ", evaluation disagreements=" << disagreements
         << ", geometric-sum split length=" << total;
  return {length_violations == 0 && invalid == 0 && disagreements == 0 && total == 2,
          detail.str()};
}

// --- criterion 5: lift round trip ------------------------------------------

Verdict lift_round_trip() {
  std::mt19937_64 rng(404);
  int failures = 0;
  long long members = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int arity = 1 + static_cast<int>(rng() % 2);
    FormulaDoc doc;
    doc.arity = arity;
    std::vector<Formula> atoms;
    int natoms = 1 + static_cast<int>(rng() % 2);
    for (int i = 0; i < natoms; ++i) {
      AdditiveRepr r = random_slp(rng, arity, 1 + static_cast<int>(rng() % 3), false);
      SparsePoly poly = slp_expand_divfree(r);
      if (poly.is_constant()) {
        --i;
        continue;
      }
      int ref = doc.add_poly(poly, r);
      Rel rel = std::vector<Rel>{Rel::Le, Rel::Ge, Rel::Eq}[rng() % 3];
      atoms.push_back(Formula::make_atom(ref, rel));
    }
    doc.root = Formula::make_and(std::move(atoms));
    auto [lifted, desc] = divfree_lift(doc);
    CheckReport rep = lift_consistency_check(doc, lifted, desc, 200, 1000 + trial);
    if (!rep.pass || rep.violations != 0) ++failures;
    members += rep.members;
  }
  std::ostringstream detail;
  detail << " docs with disagreement=" << failures << ", members seen=" << members;
  return {failures == 0 && members > 0, detail.str()};
}

// --- criterion 6: sandwich and monotonicity --------------------------------

Verdict sandwich_and_monotonicity() {
  struct Instance {
    const char* text;
    int p;
    Rational R;
    Rational eps;
  };
  std::vector<Instance> instances = {
      {"x1^2+x2^2-1 = 0", 1, Rational(1), Rational(1, 20)},
      {"x1^2+x2^2-1 = 0", 2, Rational(1), Rational(1, 2)},
      {"x1^2+x2^2-1 = 0", 3, Rational(1), Rational(1, 2)},
      {"x1^2+x2^2-1 <= 0", 2, Rational(1), Rational(1, 4)},
      {"x1^2+x2^2-1 <= 0 & 1/4-x1^2-x2^2 <= 0", 2, Rational(1), Rational(1, 2)},
      {"x1^2-1/4 <= 0", 2, Rational(1), Rational(1, 10)},
      {"x1*(x1-1/2) >= 0 & x1^2-1 <= 0", 1, Rational(1), Rational(1, 10)},
      {"x2 = 0 & x1^2-1 <= 0", 2, Rational(2), Rational(1, 2)},
      {"x2-x1^2 = 0", 2, Rational(1), Rational(1, 2)},
      {"x1^2-1/4 <= 0 & x2^2-1/4 <= 0", 3, Rational(1), Rational(1)},
  };
  long long violations = 0;
  int infeasible = 0;
  std::ostringstream detail;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    FormulaDoc doc = parse_formula(inst.text);
    std::vector<SparsePoly> f = first_coordinate_map(doc.arity);
    double Rd = to_double(inst.R);
    SampleCloud cloud = sample_realization(doc, Box::cube(-Rd, Rd, doc.arity),
                                           SampleMode::Grid, doc.arity == 1 ? 2001 : 173);
    if (cloud.empty_flagged) {
      ++infeasible;
      continue;
    }
    double eta = 2.0 * estimate_eta(inst.p, Rd, f, cloud).eta;
    CheckReport sw =
        sandwich_check(doc, f, inst.p, inst.R, inst.eps, eta, 500, 100 + i);
    CheckReport mono = monotonicity_check(doc, f, inst.p, inst.R,
                                          {inst.eps, 2 * inst.eps, 4 * inst.eps}, 500, 100 + i);
    violations += sw.violations + mono.violations;
    if (sw.infeasible || mono.infeasible) ++infeasible;
  }
  detail << " violations=" << violations << ", infeasible=" << infeasible;
  return {violations == 0 && infeasible == 0, detail.str()};
}

// --- criterion 7: dagger audit ----------------------------------------------

Verdict dagger_audit() {
  struct Case {
    const char* text;
    Rational R, Rp;
    long long res;
  };
  std::vector<Case> cases = {
      {"x1 <= 0", Rational(1), Rational(2), 201},
      {"x1^2+x2^2-1 <= 0", Rational(1), Rational(3), 81},
      {"x1*(x1^2+x2^2-1) = 0 & x2 >= 0", Rational(2), Rational(5), 81},
  };
  bool ok = true;
  std::ostringstream detail;
  for (const Case& c : cases) {
    ProjectionReport rep = dagger_projection_check(parse_formula(c.text), c.R, c.Rp,
                                                   DaggerMode::Corrected, c.res);
    if (!rep.pass) ok = false;
    detail << " [corrected d=" << rep.d_sym << (rep.pass ? "" : " FAIL") << "]";
  }
  ProjectionReport literal = dagger_projection_check(parse_formula("x1 <= 0"), Rational(1),
                                                     Rational(2), DaggerMode::PaperLiteral, 201);
  detail << " [literal d=" << literal.d_sym << (literal.pass ? " UNDETECTED" : " detected") << "]";
  if (literal.pass) ok = false;
  return {ok, detail.str()};
}

// --- criterion 8: beta_0 proxy ----------------------------------------------

Verdict beta0_proxy() {
  FormulaDoc curve = parse_formula("x1*(x1^2+x2^2-1) = 0", 2);
  SampleCloud one = sample_realization(curve, Box::cube(-2, 2, 2), SampleMode::Grid, 201);
  int beta_one = one.empty_flagged ? 0 : connected_components(one, default_linking_radius(one));

  FormulaDoc two_circles =
      parse_formula("(x1^2+x2^2-1)*((x1-10)^2+x2^2-1) = 0", 2);
  SampleCloud two =
      sample_realization(two_circles, Box::cube(-12, 12, 2), SampleMode::Grid, 401);
  int beta_two = two.empty_flagged ? 0 : connected_components(two, default_linking_radius(two));

  std::ostringstream detail;
  detail << " beta0(line+circle)=" << beta_one << ", beta0(two circles)=" << beta_two;
  return {beta_one == 1 && beta_two == 2, detail.str()};
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Verdict (*run)();
  };
  std::vector<Entry> entries = {
      {"figure rerun converges at scale", figure_rerun},
      {"slab family matches the closed form", slab_closed_form},
      {"diagonal formats within predicted bounds", format_dominance},
      {"quotient reduction is length-safe and exact", quotient_reduction},
      {"division-free lift round trip", lift_round_trip},
      {"sandwich and monotonicity inclusions", sandwich_and_monotonicity},
      {"dagger projection audit", dagger_audit},
      {"beta0 proxy on known curves", beta0_proxy},
  };
  int failed = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Verdict v;
    try {
      v = entries[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string(" exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("criterion %zu: %s — %s —%s\n", i + 1, v.pass ? "PASS" : "FAIL",
                entries[i].name, v.detail.c_str());
  }
  if (failed) std::printf("%d criterion(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
