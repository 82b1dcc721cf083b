#include "salt/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

namespace salt {

void VariableLayout::add(const std::string& name, int size) {
  blocks.push_back({name, total, size});
  total += size;
}

const VariableBlock& VariableLayout::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw std::invalid_argument("unknown variable block: " + name);
}

int pair_count(int p) { return p * (p + 1) / 2; }

int pair_index(int p, int i, int j) {
  if (i < 0 || j <= i || j > p) throw std::invalid_argument("pair index out of range");
  return i * p - i * (i - 1) / 2 + (j - i - 1);
}

std::string to_string(DaggerMode mode) {
  return mode == DaggerMode::Corrected ? "corrected" : "paper-literal";
}

namespace {

Rational rat_pow(const Rational& b, int e) {
  Rational acc(1);
  for (int i = 0; i < e; ++i) acc *= b;
  return acc;
}

ExponentVector padded(const ExponentVector& e, int n) {
  ExponentVector out = e;
  out.resize(static_cast<std::size_t>(n), 0);
  return out;
}

// ---------------------------------------------------------------------------
// Hand-built witnesses: monomials over (x, q) plus a step accumulator, so a
// construction can account for every addition it spends.

struct Mono {
  Rational c;
  ExponentVector zeta;  // ambient variables
  ExponentVector eta;   // earlier steps (any length <= current step count)
};

Mono mono_mul(const Mono& a, const Mono& b) {
  Mono out;
  out.c = a.c * b.c;
  out.zeta = a.zeta;
  for (std::size_t i = 0; i < b.zeta.size(); ++i) out.zeta[i] += b.zeta[i];
  out.eta = padded(a.eta, static_cast<int>(std::max(a.eta.size(), b.eta.size())));
  for (std::size_t i = 0; i < b.eta.size(); ++i) out.eta[i] += b.eta[i];
  return out;
}

Mono mono_pow(const Mono& a, int e) {
  Mono out = a;
  out.c = rat_pow(a.c, e);
  for (auto& v : out.zeta) v *= e;
  for (auto& v : out.eta) v *= e;
  return out;
}

Mono mono_scale(Mono a, const Rational& s) {
  a.c *= s;
  return a;
}

struct WitnessBuilder {
  explicit WitnessBuilder(int arity) {
    r.arity = arity;
    r.mode = SlpMode::DivisionFree;
  }

  Mono one() const { return {Rational(1), ExponentVector(r.arity, 0), {}}; }

  Mono var(int index, int exp = 1) const {
    Mono m = one();
    m.zeta[index] = exp;
    return m;
  }

  // Appends another program over the same arity; returns its result monomial.
  Mono absorb(const AdditiveRepr& part) {
    if (part.arity != r.arity) throw ArityMismatch("witness arity");
    if (part.mode != SlpMode::DivisionFree) r.mode = SlpMode::General;
    int shift = r.length();
    for (const AddStep& s : part.steps)
      r.steps.push_back({s.u, s.alpha, shifted(s.gamma, shift), s.v, s.beta,
                         shifted(s.delta, shift)});
    return {part.final.c, part.final.zeta, shifted(part.final.eta, shift)};
  }

  Mono add(const Mono& a, const Mono& b) {
    int n = r.length();
    r.steps.push_back({a.c, a.zeta, padded(a.eta, n), b.c, b.zeta, padded(b.eta, n)});
    Mono m = one();
    m.eta = ExponentVector(static_cast<std::size_t>(n) + 1, 0);
    m.eta[static_cast<std::size_t>(n)] = 1;
    return m;
  }

  AdditiveRepr finish(const Mono& m) {
    r.final = {m.c, m.zeta, padded(m.eta, r.length())};
    return r;
  }

  AdditiveRepr r;

 private:
  static ExponentVector shifted(const ExponentVector& e, int shift) {
    ExponentVector out(static_cast<std::size_t>(shift), 0);
    out.insert(out.end(), e.begin(), e.end());
    return out;
  }
};

AdditiveRepr attached_or_naive(const PolyEntry& entry) {
  return entry.repr ? *entry.repr : naive_repr(entry.poly);
}

AdditiveRepr divfree_or_naive(const std::optional<AdditiveRepr>& repr, const SparsePoly& p) {
  if (repr && repr->mode == SlpMode::DivisionFree) return *repr;
  return naive_repr(p);
}

SparsePoly sum_squares(int arity, int offset, int count) {
  SparsePoly p(arity);
  for (int m = 0; m < count; ++m) {
    ExponentVector e(static_cast<std::size_t>(arity), 0);
    e[static_cast<std::size_t>(offset + m)] = 2;
    p.add_term(e, Rational(1));
  }
  return p;
}

// |x_block|^2 - r2 <= 0, with its exact (count additions) witness.
int add_ball(FormulaDoc& out, int offset, int count, const Rational& r2) {
  SparsePoly b = sum_squares(out.arity, offset, count);
  b.add_term(ExponentVector(static_cast<std::size_t>(out.arity), 0), -r2);
  return out.add_poly(b, naive_repr(b));
}

// Copies a subformula into dst, embedding the polynomials (and any attached
// witnesses) with the given variable offset.
Formula import_node(FormulaDoc& dst, const FormulaDoc& src, const Formula& node, int offset) {
  switch (node.kind) {
    case Formula::Kind::Atom: {
      const PolyEntry& e = src.poly_table[static_cast<std::size_t>(node.atom.poly_ref)];
      SparsePoly p = e.poly.embed(dst.arity, offset);
      int id = e.repr ? dst.add_poly(p, embed_repr(*e.repr, dst.arity, offset))
                      : dst.add_poly(p);
      return Formula::make_atom(id, node.atom.rel);
    }
    case Formula::Kind::Not:
      return Formula::make_not(import_node(dst, src, node.children[0], offset));
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<Formula> kids;
      kids.reserve(node.children.size());
      for (const Formula& c : node.children) kids.push_back(import_node(dst, src, c, offset));
      return node.kind == Formula::Kind::And ? Formula::make_and(std::move(kids))
                                             : Formula::make_or(std::move(kids));
    }
  }
  throw std::logic_error("unreachable");
}

void require_equations_only(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::Atom:
      if (f.atom.rel != Rel::Eq)
        throw std::invalid_argument("bar construction accepts equations only");
      return;
    case Formula::Kind::Not:
      throw std::invalid_argument("bar construction accepts no negations");
    case Formula::Kind::And:
    case Formula::Kind::Or:
      for (const Formula& c : f.children) require_equations_only(c);
      return;
  }
}

// Pbar^2 - U*Qbar^2 + U^{N+1} <= 0 with Pbar = P * prod_{j != self} Q_j and
// Qbar = prod_j Q_j, all embedded into out (U last). The witness concatenates
// the factor programs once and spends two more additions.
int add_bar_atom(FormulaDoc& out, int nexp, const SparsePoly& P, const AdditiveRepr& P_repr,
                 const std::vector<const SparsePoly*>& Qs,
                 const std::vector<const AdditiveRepr*>& Q_reprs, int self) {
  int m = out.arity;
  int u = m - 1;

  SparsePoly pbar = P.embed(m, 0);
  SparsePoly qbar = SparsePoly::constant(m, Rational(1));
  for (std::size_t j = 0; j < Qs.size(); ++j) {
    SparsePoly q = Qs[j]->embed(m, 0);
    if (static_cast<int>(j) != self) pbar = pbar * q;
    qbar = qbar * q;
  }
  SparsePoly uvar = SparsePoly::variable(m, u);
  SparsePoly poly = pbar * pbar - uvar * qbar * qbar + uvar.pow(nexp + 1);

  WitnessBuilder wb(m);
  Mono mp = wb.absorb(embed_repr(P_repr, m, 0));
  Mono pbar_m = mp;
  Mono qbar_m = wb.one();
  for (std::size_t j = 0; j < Q_reprs.size(); ++j) {
    Mono mq = wb.absorb(embed_repr(*Q_reprs[j], m, 0));
    if (static_cast<int>(j) != self) pbar_m = mono_mul(pbar_m, mq);
    qbar_m = mono_mul(qbar_m, mq);
  }
  Mono s1 = wb.add(mono_pow(pbar_m, 2),
                   mono_scale(mono_mul(wb.var(u), mono_pow(qbar_m, 2)), Rational(-1)));
  Mono s2 = wb.add(s1, wb.var(u, nexp + 1));
  return out.add_poly(poly, wb.finish(s2));
}

// |f(X^i)-f(X^j)|^2 - A as a 2q-addition program when every nonzero component
// of f is a single term; nullopt otherwise.
std::optional<AdditiveRepr> pair_witness(int arity, const std::vector<SparsePoly>& comps,
                                         int off_i, int off_j, int a_var) {
  WitnessBuilder wb(arity);
  std::vector<Mono> squares;
  for (const SparsePoly& f : comps) {
    if (f.is_zero()) continue;
    if (!f.is_monomial()) return std::nullopt;
    const auto& [e, c] = *f.terms().begin();
    Mono mi = wb.one(), mj = wb.one();
    mi.c = c;
    mj.c = -c;
    for (std::size_t v = 0; v < e.size(); ++v) {
      mi.zeta[static_cast<std::size_t>(off_i) + v] = e[v];
      mj.zeta[static_cast<std::size_t>(off_j) + v] = e[v];
    }
    squares.push_back(mono_pow(wb.add(mi, mj), 2));
  }
  Mono minus_a = mono_scale(wb.var(a_var), Rational(-1));
  if (squares.empty()) return wb.finish(minus_a);
  Mono cur = squares[0];
  for (std::size_t c = 1; c < squares.size(); ++c) cur = wb.add(cur, squares[c]);
  return wb.finish(wb.add(cur, minus_a));
}

struct JoinParts {
  FormulaDoc doc;
  VariableLayout layout;
  int p = 0;
  int k = 0;
  std::vector<Formula> omega, theta1, theta2, theta3;
};

JoinParts build_join_parts(const FormulaDoc& base, JoinKind kind,
                           const std::vector<SparsePoly>& f, int p, const Rational& R2,
                           const Rational& eps) {
  bool thick = kind == JoinKind::Thickened || kind == JoinKind::Diagonal;
  bool has_theta3 = kind != JoinKind::Plain;
  if (p < (kind == JoinKind::Diagonal ? 1 : 0))
    throw std::invalid_argument("thickened diagonal needs p >= 1");
  if (!(R2 > 0)) throw std::invalid_argument("radius must be positive");
  if (thick && eps < 0) throw std::invalid_argument("eps must be nonnegative");
  if (kind == JoinKind::Fibered || kind == JoinKind::Thickened) {
    for (const SparsePoly& c : f)
      if (c.arity() != base.arity) throw ArityMismatch("map component arity");
  }

  JoinParts jp;
  jp.p = p;
  jp.k = base.arity;
  const int k = jp.k;
  const int C = pair_count(p);
  for (int i = 0; i <= p; ++i) jp.layout.add("x" + std::to_string(i), k);
  jp.layout.add("t", p + 1);
  jp.layout.add("a", C);
  const int N = jp.layout.total;
  const int t_off = (p + 1) * k;
  const int a_off = t_off + p + 1;
  jp.doc.arity = N;
  FormulaDoc& doc = jp.doc;

  // Omega: per-copy balls and |T|^2 <= 1.
  for (int i = 0; i <= p; ++i)
    jp.omega.push_back(Formula::make_atom(add_ball(doc, i * k, k, R2), Rel::Le));
  jp.omega.push_back(Formula::make_atom(add_ball(doc, t_off, p + 1, Rational(1)), Rel::Le));

  // Theta1: sum T_i = 1, plus the A-sum over the kind's pair range.
  SparsePoly tsum(N);
  for (int i = 0; i <= p; ++i) tsum += SparsePoly::variable(N, t_off + i);
  tsum.add_term(ExponentVector(static_cast<std::size_t>(N), 0), Rational(-1));
  jp.theta1.push_back(Formula::make_atom(doc.add_poly(tsum, naive_repr(tsum)), Rel::Eq));

  SparsePoly asum(N);
  for (int i = thick ? 1 : 0; i < p; ++i)
    for (int j = i + 1; j <= p; ++j) {
      ExponentVector e(static_cast<std::size_t>(N), 0);
      e[static_cast<std::size_t>(a_off + pair_index(p, i, j))] = 2;
      asum.add_term(e, Rational(1));
    }
  if (!asum.is_zero()) {
    if (thick) asum.add_term(ExponentVector(static_cast<std::size_t>(N), 0), -eps);
    jp.theta1.push_back(Formula::make_atom(doc.add_poly(asum, naive_repr(asum)),
                                           thick ? Rel::Le : Rel::Eq));
  }

  // Theta2: T_i = 0 or the base formula on copy i.
  std::vector<int> t_ids(static_cast<std::size_t>(p) + 1);
  for (int i = 0; i <= p; ++i) {
    SparsePoly t = SparsePoly::variable(N, t_off + i);
    t_ids[static_cast<std::size_t>(i)] = doc.add_poly(t, naive_repr(t));
  }
  for (int i = 0; i <= p; ++i)
    jp.theta2.push_back(Formula::make_or(
        {Formula::make_atom(t_ids[static_cast<std::size_t>(i)], Rel::Eq),
         import_node(doc, base, base.root, i * k)}));

  // Theta3 / Upsilon: pairwise fiber conditions.
  if (has_theta3) {
    std::vector<SparsePoly> comps;
    if (kind == JoinKind::Diagonal)
      for (int c = 0; c < k; ++c) comps.push_back(SparsePoly::variable(k, c));
    else
      comps = f;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j <= p; ++j) {
        SparsePoly poly(N);
        for (const SparsePoly& c : comps) {
          SparsePoly d = c.embed(N, i * k) - c.embed(N, j * k);
          poly += d * d;
        }
        poly -= SparsePoly::variable(N, a_off + pair_index(p, i, j));
        auto w = pair_witness(N, comps, i * k, j * k, a_off + pair_index(p, i, j));
        int id = w ? doc.add_poly(poly, *w) : doc.add_poly(poly, naive_repr(poly));
        jp.theta3.push_back(Formula::make_or(
            {Formula::make_atom(t_ids[static_cast<std::size_t>(i)], Rel::Eq),
             Formula::make_atom(t_ids[static_cast<std::size_t>(j)], Rel::Eq),
             Formula::make_atom(id, Rel::Eq)}));
      }
  }
  return jp;
}

JoinConstruction assemble_join(JoinParts jp, JoinKind kind, const Rational& R2,
                               const Rational& eps) {
  std::vector<Formula> conj;
  for (auto* part : {&jp.omega, &jp.theta1, &jp.theta2, &jp.theta3})
    conj.insert(conj.end(), part->begin(), part->end());
  jp.doc.root = Formula::make_and(std::move(conj));
  JoinConstruction out;
  out.doc = std::move(jp.doc);
  out.layout = std::move(jp.layout);
  out.kind = kind;
  out.p = jp.p;
  out.k = jp.k;
  out.R2 = R2;
  out.eps = (kind == JoinKind::Thickened || kind == JoinKind::Diagonal) ? eps : Rational(0);
  return out;
}

AdditiveRepr const_one_repr(int arity) {
  AdditiveRepr r;
  r.arity = arity;
  r.final = {Rational(1), ExponentVector(static_cast<std::size_t>(arity), 0), {}};
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Division-free lift.

std::pair<FormulaDoc, LiftDescriptor> divfree_lift(const FormulaDoc& doc) {
  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  std::vector<char> used(doc.poly_table.size(), 0);
  for (const Atom* a : atoms) used[static_cast<std::size_t>(a->poly_ref)] = 1;

  LiftDescriptor desc;
  desc.base_arity = doc.arity;
  std::vector<int> block_of(doc.poly_table.size(), -1);
  int next = doc.arity;
  for (std::size_t i = 0; i < doc.poly_table.size(); ++i) {
    if (!used[i]) continue;
    const PolyEntry& entry = doc.poly_table[i];
    if (!entry.repr || entry.repr->mode != SlpMode::DivisionFree)
      throw std::invalid_argument(
          "division-free lift needs a division-free representation for every referenced "
          "polynomial");
    block_of[i] = static_cast<int>(desc.reprs.size());
    desc.block_offsets.push_back(next);
    desc.reprs.push_back(*entry.repr);
    next += entry.repr->length();
  }
  desc.lifted_arity = next;

  FormulaDoc out;
  out.arity = desc.lifted_arity;
  const int k = doc.arity;

  auto term_exp = [&](const ExponentVector& xexp, const ExponentVector& qexp, int off) {
    ExponentVector e(static_cast<std::size_t>(out.arity), 0);
    for (int v = 0; v < k; ++v) e[static_cast<std::size_t>(v)] = xexp[static_cast<std::size_t>(v)];
    for (std::size_t l = 0; l < qexp.size(); ++l)
      e[static_cast<std::size_t>(off) + l] = qexp[l];
    return e;
  };

  std::vector<Formula> conj;
  for (std::size_t b = 0; b < desc.reprs.size(); ++b) {
    const AdditiveRepr& r = desc.reprs[b];
    int off = desc.block_offsets[b];
    for (int j = 0; j < r.length(); ++j) {
      const AddStep& s = r.steps[static_cast<std::size_t>(j)];
      SparsePoly eq(out.arity);
      ExponentVector y(static_cast<std::size_t>(out.arity), 0);
      y[static_cast<std::size_t>(off + j)] = 1;
      eq.add_term(y, Rational(1));
      eq.add_term(term_exp(s.alpha, s.gamma, off), -s.u);
      eq.add_term(term_exp(s.beta, s.delta, off), -s.v);
      conj.push_back(Formula::make_atom(out.add_poly(eq, naive_repr(eq)), Rel::Eq));
    }
  }

  std::function<Formula(const Formula&)> rewrite = [&](const Formula& f) -> Formula {
    switch (f.kind) {
      case Formula::Kind::Atom: {
        int b = block_of[static_cast<std::size_t>(f.atom.poly_ref)];
        const AdditiveRepr& r = desc.reprs[static_cast<std::size_t>(b)];
        SparsePoly m(out.arity);
        m.add_term(term_exp(r.final.zeta, r.final.eta, desc.block_offsets[static_cast<std::size_t>(b)]),
                   r.final.c);
        return Formula::make_atom(out.add_poly(m, naive_repr(m)), f.atom.rel);
      }
      case Formula::Kind::Not:
        return Formula::make_not(rewrite(f.children[0]));
      case Formula::Kind::And:
      case Formula::Kind::Or: {
        std::vector<Formula> kids;
        for (const Formula& c : f.children) kids.push_back(rewrite(c));
        return f.kind == Formula::Kind::And ? Formula::make_and(std::move(kids))
                                            : Formula::make_or(std::move(kids));
      }
    }
    throw std::logic_error("unreachable");
  };
  conj.push_back(rewrite(doc.root));
  out.root = Formula::make_and(std::move(conj));
  return {std::move(out), std::move(desc)};
}

namespace {

template <typename T>
std::vector<T> lift_point_impl(const LiftDescriptor& d, const std::vector<T>& x) {
  if (static_cast<int>(x.size()) != d.base_arity) throw ArityMismatch("lift point length");
  std::vector<T> out = x;
  for (const AdditiveRepr& r : d.reprs) {
    std::vector<T> q = slp_eval_steps(r, x);
    out.insert(out.end(), q.begin(), q.end());
  }
  return out;
}

}  // namespace

std::vector<Rational> lift_point(const LiftDescriptor& d, const std::vector<Rational>& x) {
  return lift_point_impl(d, x);
}
std::vector<double> lift_point(const LiftDescriptor& d, const std::vector<double>& x) {
  return lift_point_impl(d, x);
}

// ---------------------------------------------------------------------------
// Limit family and bar construction.

FamilyDoc limit_family_single(const SparsePoly& P, const SparsePoly& Q, const Rational& R) {
  if (P.arity() != Q.arity()) throw ArityMismatch("numerator/denominator arity");
  if (Q.is_zero()) throw std::invalid_argument("denominator is identically zero");
  if (!(R > 0)) throw std::invalid_argument("radius must be positive");
  const int k = P.arity();
  const int nexp = 2 * *Q.degree() + 1;

  FamilyDoc out;
  out.arity = k + 1;
  out.is_family = true;
  AdditiveRepr pr = naive_repr(P);
  AdditiveRepr qr = naive_repr(Q);
  int id = add_bar_atom(out, nexp, P, pr, {&Q}, {&qr}, 0);
  std::vector<Formula> conj{Formula::make_atom(id, Rel::Le)};
  conj.push_back(Formula::make_atom(add_ball(out, 0, k, R * R), Rel::Le));
  SparsePoly t = SparsePoly::variable(out.arity, k);
  conj.push_back(Formula::make_atom(out.add_poly(t, naive_repr(t)), Rel::Gt));
  out.root = Formula::make_and(std::move(conj));
  return out;
}

FamilyDoc bar_construction(const FormulaDoc& doc, const std::vector<QuotientPair>& quotients,
                           const std::vector<BarBlock>& blocks) {
  if (quotients.size() != doc.poly_table.size())
    throw std::invalid_argument("need one quotient per polynomial table entry");
  require_equations_only(doc.root);

  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  std::vector<char> used(doc.poly_table.size(), 0);
  for (const Atom* a : atoms) used[static_cast<std::size_t>(a->poly_ref)] = 1;

  std::vector<int> refs;
  for (std::size_t i = 0; i < doc.poly_table.size(); ++i) {
    if (!used[i]) continue;
    const QuotientPair& q = quotients[i];
    if (q.P.arity() != doc.arity || q.Q.arity() != doc.arity)
      throw ArityMismatch("quotient arity");
    if (q.Q.is_zero()) throw std::invalid_argument("denominator is identically zero");
    if (!(doc.poly_table[i].poly * q.Q == q.P))
      throw std::invalid_argument("quotient mismatch: F*Q != P");
    refs.push_back(static_cast<int>(i));
  }

  SparsePoly qbar = SparsePoly::constant(doc.arity, Rational(1));
  for (int i : refs) qbar = qbar * quotients[static_cast<std::size_t>(i)].Q;
  const int nexp = qbar.is_zero() ? 1 : 2 * *qbar.degree() + 1;

  FamilyDoc out;
  out.arity = doc.arity + 1;
  out.is_family = true;

  std::vector<AdditiveRepr> q_reprs;
  std::vector<const SparsePoly*> q_polys;
  for (int i : refs) {
    const QuotientPair& q = quotients[static_cast<std::size_t>(i)];
    q_reprs.push_back(divfree_or_naive(q.Q_repr, q.Q));
    q_polys.push_back(&q.Q);
  }
  std::vector<const AdditiveRepr*> q_repr_ptrs;
  for (const AdditiveRepr& r : q_reprs) q_repr_ptrs.push_back(&r);

  std::vector<int> subst(doc.poly_table.size(), -1);
  for (std::size_t t = 0; t < refs.size(); ++t) {
    const QuotientPair& q = quotients[static_cast<std::size_t>(refs[t])];
    AdditiveRepr pr = divfree_or_naive(q.P_repr, q.P);
    subst[static_cast<std::size_t>(refs[t])] =
        add_bar_atom(out, nexp, q.P, pr, q_polys, q_repr_ptrs, static_cast<int>(t));
  }

  std::function<Formula(const Formula&)> rewrite = [&](const Formula& f) -> Formula {
    switch (f.kind) {
      case Formula::Kind::Atom:
        return Formula::make_atom(subst[static_cast<std::size_t>(f.atom.poly_ref)], Rel::Le);
      case Formula::Kind::And:
      case Formula::Kind::Or: {
        std::vector<Formula> kids;
        for (const Formula& c : f.children) kids.push_back(rewrite(c));
        return f.kind == Formula::Kind::And ? Formula::make_and(std::move(kids))
                                            : Formula::make_or(std::move(kids));
      }
      default:
        throw std::logic_error("unreachable");
    }
  };

  std::vector<Formula> conj{rewrite(doc.root)};
  for (const BarBlock& b : blocks) {
    if (b.offset < 0 || b.size <= 0 || b.offset + b.size > doc.arity)
      throw std::invalid_argument("ball block out of range");
    if (!(b.radius > 0)) throw std::invalid_argument("ball radius must be positive");
    conj.push_back(Formula::make_atom(add_ball(out, b.offset, b.size, b.radius * b.radius),
                                      Rel::Le));
  }
  SparsePoly u = SparsePoly::variable(out.arity, doc.arity);
  conj.push_back(Formula::make_atom(out.add_poly(u, naive_repr(u)), Rel::Gt));
  out.root = Formula::make_and(std::move(conj));
  return out;
}

// ---------------------------------------------------------------------------
// Joins.

JoinConstruction build_join(const FormulaDoc& base, JoinKind kind,
                            const std::vector<SparsePoly>& f, int p, const Rational& R2,
                            const Rational& eps) {
  return assemble_join(build_join_parts(base, kind, f, p, R2, eps), kind, R2, eps);
}

JoinConstruction join_formula(const FormulaDoc& base, int p, const Rational& R) {
  if (!(R > 0)) throw std::invalid_argument("radius must be positive");
  return build_join(base, JoinKind::Plain, {}, p, R * R, Rational(0));
}

JoinConstruction fibered_join_formula(const FormulaDoc& base, const std::vector<SparsePoly>& f,
                                      int p, const Rational& R) {
  if (!(R > 0)) throw std::invalid_argument("radius must be positive");
  return build_join(base, JoinKind::Fibered, f, p, R * R, Rational(0));
}

JoinConstruction thickened_join_formula(const FormulaDoc& base, const std::vector<SparsePoly>& f,
                                        int p, const Rational& R, const Rational& eps) {
  if (!(R > 0)) throw std::invalid_argument("radius must be positive");
  if (eps < 0) throw std::invalid_argument("eps must be nonnegative");
  return build_join(base, JoinKind::Thickened, f, p, R * R, eps);
}

JoinConstruction thickened_diagonal(const FormulaDoc& base, int p, const Rational& R,
                                    const Rational& eps) {
  if (!(R > 0)) throw std::invalid_argument("radius must be positive");
  if (eps < 0) throw std::invalid_argument("eps must be nonnegative");
  return build_join(base, JoinKind::Diagonal, {}, p, R * R, eps);
}

// ---------------------------------------------------------------------------
// Dagger.

DaggerResult dagger(const FormulaDoc& doc, const Rational& R, const Rational& Rp,
                    DaggerMode mode) {
  if (!is_pclosed(doc))
    throw std::invalid_argument("dagger needs a closed formula: no negations, weak relations");
  if (!(R > 0) || !(R < Rp)) throw std::invalid_argument("need 0 < R < R'");

  const int k = doc.arity;
  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  std::vector<int> vslot(doc.poly_table.size(), -1);
  int slack = 0;
  for (const Atom* a : atoms)
    if (a->rel != Rel::Eq && vslot[static_cast<std::size_t>(a->poly_ref)] < 0)
      vslot[static_cast<std::size_t>(a->poly_ref)] = slack++;

  DaggerResult res;
  res.k = k;
  res.slack = slack;
  res.R = R;
  res.Rp = Rp;
  res.mode = mode;
  FormulaDoc& out = res.doc;
  out.arity = k + slack + 2;
  const int v_off = k, u1 = k + slack, u2 = k + slack + 1;

  std::function<Formula(const Formula&)> rewrite = [&](const Formula& f) -> Formula {
    switch (f.kind) {
      case Formula::Kind::Atom: {
        const PolyEntry& entry = doc.poly_table[static_cast<std::size_t>(f.atom.poly_ref)];
        SparsePoly F = entry.poly.embed(out.arity, 0);
        AdditiveRepr fr = embed_repr(attached_or_naive(entry), out.arity, 0);
        if (f.atom.rel == Rel::Eq)
          return Formula::make_atom(out.add_poly(F, fr), Rel::Eq);
        int vi = v_off + vslot[static_cast<std::size_t>(f.atom.poly_ref)];
        // corrected:     <= maps to F+V^2=0,  >= maps to F-V^2=0
        // paper-literal: <= maps to F-V^2=0,  >= maps to -F-V^2=0
        bool ge = f.atom.rel == Rel::Ge;
        Rational sf((mode == DaggerMode::PaperLiteral && ge) ? -1 : 1);
        Rational sv((mode == DaggerMode::Corrected && !ge) ? 1 : -1);
        ExponentVector v2(static_cast<std::size_t>(out.arity), 0);
        v2[static_cast<std::size_t>(vi)] = 2;
        SparsePoly poly = F.scaled(sf) + SparsePoly::monomial(out.arity, v2, sv);
        WitnessBuilder wb(out.arity);
        Mono mf = wb.absorb(fr);
        Mono r = wb.add(mono_scale(mf, sf), mono_scale(wb.var(vi, 2), sv));
        return Formula::make_atom(out.add_poly(poly, wb.finish(r)), Rel::Eq);
      }
      case Formula::Kind::And:
      case Formula::Kind::Or: {
        std::vector<Formula> kids;
        for (const Formula& c : f.children) kids.push_back(rewrite(c));
        return f.kind == Formula::Kind::And ? Formula::make_and(std::move(kids))
                                            : Formula::make_or(std::move(kids));
      }
      default:
        throw std::logic_error("unreachable");
    }
  };

  std::vector<Formula> conj{rewrite(doc.root)};
  SparsePoly s1 = sum_squares(out.arity, 0, k);
  {
    ExponentVector e(static_cast<std::size_t>(out.arity), 0);
    e[static_cast<std::size_t>(u1)] = 2;
    s1.add_term(e, Rational(1));
    s1.add_term(ExponentVector(static_cast<std::size_t>(out.arity), 0), -(R * R));
  }
  conj.push_back(Formula::make_atom(out.add_poly(s1, naive_repr(s1)), Rel::Eq));
  SparsePoly s2 = sum_squares(out.arity, v_off, slack);
  {
    ExponentVector e(static_cast<std::size_t>(out.arity), 0);
    e[static_cast<std::size_t>(u2)] = 2;
    s2.add_term(e, Rational(1));
    s2.add_term(ExponentVector(static_cast<std::size_t>(out.arity), 0), -(Rp * Rp));
  }
  conj.push_back(Formula::make_atom(out.add_poly(s2, naive_repr(s2)), Rel::Eq));
  out.root = Formula::make_and(std::move(conj));
  return res;
}

Rational default_r_prime(const FormulaDoc& doc, const Rational& R) {
  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  std::vector<char> weak(doc.poly_table.size(), 0);
  bool any = false;
  for (const Atom* a : atoms)
    if (a->rel == Rel::Le || a->rel == Rel::Ge) {
      weak[static_cast<std::size_t>(a->poly_ref)] = 1;
      any = true;
    }
  if (!any) return Rational(10) * R;

  double rd = to_double(R);
  std::mt19937_64 rng(9001);
  std::uniform_real_distribution<double> box(-rd, rd);
  double worst = 0.0;
  for (int it = 0; it < 1024; ++it) {
    std::vector<double> x(static_cast<std::size_t>(doc.arity));
    double norm2 = 0.0;
    for (auto& v : x) {
      v = box(rng);
      norm2 += v * v;
    }
    if (norm2 > rd * rd) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < doc.poly_table.size(); ++i)
      if (weak[i]) sum += std::fabs(doc.poly_table[i].poly.eval(x));
    worst = std::max(worst, std::sqrt(sum));
  }
  worst = std::min(worst, 1e15);
  return Rational(10) * R * (Rational(1) + Rational(Int(static_cast<long long>(std::ceil(worst)))));
}

// ---------------------------------------------------------------------------
// Star.

StarResult star_formula(const FormulaDoc& doc, int p, const Rational& R, const Rational& Rp,
                        DaggerMode mode) {
  StarResult res;
  res.trace.push_back({"input", doc.arity, measure_format(doc)});

  res.dag = dagger(doc, R, Rp, mode);
  res.trace.push_back({"dagger", res.dag.doc.arity, measure_format(res.dag.doc)});

  const int kd = res.dag.doc.arity;
  std::vector<SparsePoly> proj;
  for (int c = 0; c < doc.arity; ++c) proj.push_back(SparsePoly::variable(kd, c));
  const Rational r2 = R * R + Rp * Rp;

  JoinParts jp = build_join_parts(res.dag.doc, JoinKind::Fibered, proj, p, r2, Rational(0));
  const int n = jp.doc.arity;
  res.join = assemble_join(jp, JoinKind::Fibered, r2, Rational(0));
  res.trace.push_back({"join", n, measure_format(res.join.doc)});

  // Bar only the equational part; the ball clauses stay outside.
  FormulaDoc theta = jp.doc;
  std::vector<Formula> tconj;
  for (auto* part : {&jp.theta1, &jp.theta2, &jp.theta3})
    tconj.insert(tconj.end(), part->begin(), part->end());
  theta.root = Formula::make_and(std::move(tconj));

  std::vector<QuotientPair> quots;
  for (const PolyEntry& e : theta.poly_table)
    quots.push_back({e.poly, SparsePoly::constant(n, Rational(1)), e.repr, const_one_repr(n)});
  FamilyDoc barred = bar_construction(theta, quots, {});
  res.trace.push_back({"bar", barred.arity, measure_format(barred)});

  FamilyDoc star;
  star.arity = n + 1;
  star.is_family = true;
  std::vector<Formula> conj;
  for (const Formula& cl : jp.omega) conj.push_back(import_node(star, jp.doc, cl, 0));
  Formula barf = import_node(star, barred, barred.root, 0);
  if (barf.kind == Formula::Kind::And)
    conj.insert(conj.end(), barf.children.begin(), barf.children.end());
  else
    conj.push_back(std::move(barf));
  star.root = Formula::make_and(std::move(conj));
  res.doc = std::move(star);
  res.trace.push_back({"star", res.doc.arity, measure_format(res.doc)});

  res.notes = {
      "join radius squared set to R^2+R'^2: every point satisfying the slacked formula lies "
      "on that sphere",
      "ball clauses stay outside the bar construction; only the equational clauses are barred",
      "the fibered join uses the coordinate projection to the first k variables as its map",
  };
  return res;
}

// ---------------------------------------------------------------------------
// Format predictions.

FormatPrediction predict_diagonal_format(int p, int k, int a, int s, int d) {
  if (p < 0 || k < 0 || a < 0 || s < 0 || d < 0)
    throw std::invalid_argument("format parameters must be nonnegative");
  FormatPrediction f;
  f.p = p, f.k = k, f.a = a, f.s = s, f.d = d;
  const int C = pair_count(p);
  f.N = (p + 1) * (k + 1) + C;
  f.M = (p + 1) * (k + a + 2) + 2 * k * C;
  f.Mprime = (p + 1) * (s + 2) + 3 * C + 3;
  f.degree_bound = d + 1;
  f.M_omega = (p + 1) * k + (p + 1);
  f.M_theta1 = (p + 1) + C;
  f.M_theta2 = (p + 1) * a;
  f.M_upsilon = 2 * k * C;
  f.Mp_omega = (p + 1) + 1;
  f.Mp_theta1 = 2;
  f.Mp_theta2 = (p + 1) * (s + 1);
  f.Mp_upsilon = 3 * C;
  return f;
}

StarFormatPrediction predict_star_format(int p, int k, int a) {
  if (p < 0 || k < 0 || a < 0)
    throw std::invalid_argument("format parameters must be nonnegative");
  StarFormatPrediction f;
  f.p = p, f.k = k, f.a = a;
  const long long C = pair_count(p);
  f.N = static_cast<long long>(p + 1) * (2 * k + a + 3) + C;
  const long long per_copy = static_cast<long long>(p + 1) * (6 * k + 6 * a + 1);
  const long long per_pair = C * (4 * k + 2 * a + 3);
  f.M_prop = per_copy + 2 * per_pair;
  f.M_inline = per_copy + per_pair;
  f.divfree_M = 5 * f.M_prop * f.M_prop;
  f.divfree_N = f.N + 1;
  return f;
}

long long bar_divfree_bound(int k, int a) {
  return static_cast<long long>(k + a) * (a + 2);
}

BoundReport verify_format_bounds(const JoinConstruction& c, const FormatPrediction& pred) {
  BoundReport rep;
  rep.measured = measure_format(c.doc);
  auto fail = [&](const std::string& m) {
    rep.pass = false;
    rep.failures.push_back(m);
  };
  std::ostringstream os;
  if (c.doc.arity != pred.N) {
    os << "ambient dimension " << c.doc.arity << " != predicted " << pred.N;
    fail(os.str());
    os.str("");
  }
  if (rep.measured.a > pred.M) {
    os << "additive format " << rep.measured.a << " exceeds bound " << pred.M;
    fail(os.str());
    os.str("");
  }
  if (rep.measured.s > pred.Mprime) {
    os << "polynomial count " << rep.measured.s << " exceeds bound " << pred.Mprime;
    fail(os.str());
    os.str("");
  }
  if (rep.measured.d && *rep.measured.d > pred.degree_bound) {
    os << "degree " << *rep.measured.d << " exceeds bound " << pred.degree_bound;
    fail(os.str());
  }
  return rep;
}

}  // namespace salt
