#include "salt/slp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace salt {

std::string to_string(SlpMode mode) {
  switch (mode) {
    case SlpMode::DivisionFree: return "division-free";
    case SlpMode::Lemma31: return "lemma31";
    case SlpMode::General: return "general";
  }
  return "?";
}

namespace {

bool all_nonneg(const ExponentVector& e) {
  return std::all_of(e.begin(), e.end(), [](int v) { return v >= 0; });
}

void check_step_shape(const AdditiveRepr& r, int j, const AddStep& s,
                      std::vector<ValidationIssue>& issues) {
  auto bad = [&](const std::string& msg) { issues.push_back({j, msg}); };
  if (static_cast<int>(s.alpha.size()) != r.arity) bad("alpha length != arity");
  if (static_cast<int>(s.beta.size()) != r.arity) bad("beta length != arity");
  if (static_cast<int>(s.gamma.size()) != j - 1) bad("gamma must reference exactly the earlier steps");
  if (static_cast<int>(s.delta.size()) != j - 1) bad("delta must reference exactly the earlier steps");
  if (r.mode != SlpMode::General) {
    if (!all_nonneg(s.alpha) || !all_nonneg(s.beta)) bad("negative variable exponent in step");
    if (!all_nonneg(s.gamma) || !all_nonneg(s.delta)) bad("negative step exponent in step");
  }
}

}  // namespace

ValidationReport slp_validate(const AdditiveRepr& r) {
  ValidationReport report;
  report.declared_mode = r.mode;
  report.length = r.length();
  if (r.arity < 0) report.issues.push_back({0, "negative arity"});
  for (std::size_t j = 0; j < r.steps.size(); ++j)
    check_step_shape(r, static_cast<int>(j) + 1, r.steps[j], report.issues);
  if (static_cast<int>(r.final.zeta.size()) != r.arity)
    report.issues.push_back({0, "zeta length != arity"});
  if (static_cast<int>(r.final.eta.size()) != r.length())
    report.issues.push_back({0, "eta length != number of steps"});
  if (r.mode == SlpMode::DivisionFree &&
      (!all_nonneg(r.final.zeta) || !all_nonneg(r.final.eta)))
    report.issues.push_back({0, "negative result exponent in division-free mode"});
  report.valid = report.issues.empty();
  return report;
}

namespace {

// x^e with integer e; divides on negative entries.
Rational pow_exact(const Rational& base, int e) {
  if (e == 0) return Rational(1);
  if (base == 0) {
    if (e < 0) throw DivisionByZero("zero raised to a negative exponent");
    return Rational(0);
  }
  Rational b = e < 0 ? Rational(1) / base : base;
  int n = e < 0 ? -e : e;
  Rational acc(1);
  while (n > 0) {
    if (n & 1) acc *= b;
    b *= b;
    n >>= 1;
  }
  return acc;
}

double pow_approx(double base, int e) {
  if (e == 0) return 1.0;
  if (base == 0.0 && e < 0) throw DivisionByZero("zero raised to a negative exponent");
  return std::pow(base, e);
}

template <typename T>
T monomial_value(const std::vector<T>& vars, const ExponentVector& e) {
  T acc(1);
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    if constexpr (std::is_same_v<T, double>) acc *= pow_approx(vars[i], e[i]);
    else acc *= pow_exact(vars[i], e[i]);
  }
  return acc;
}

template <typename T>
std::vector<T> eval_steps_impl(const AdditiveRepr& r, const std::vector<T>& x) {
  if (static_cast<int>(x.size()) != r.arity) throw ArityMismatch("point length");
  std::vector<T> q;
  q.reserve(r.steps.size());
  for (const AddStep& s : r.steps) {
    T a = T(to_double(s.u));
    if constexpr (!std::is_same_v<T, double>) a = T(s.u);
    T b = T(to_double(s.v));
    if constexpr (!std::is_same_v<T, double>) b = T(s.v);
    a *= monomial_value(x, s.alpha);
    a *= monomial_value(q, s.gamma);
    b *= monomial_value(x, s.beta);
    b *= monomial_value(q, s.delta);
    q.push_back(a + b);
  }
  return q;
}

template <typename T>
T eval_impl(const AdditiveRepr& r, const std::vector<T>& x) {
  std::vector<T> q = eval_steps_impl(r, x);
  T result = T(to_double(r.final.c));
  if constexpr (!std::is_same_v<T, double>) result = T(r.final.c);
  result *= monomial_value(x, r.final.zeta);
  result *= monomial_value(q, r.final.eta);
  return result;
}

}  // namespace

Rational slp_eval(const AdditiveRepr& r, const std::vector<Rational>& x) {
  return eval_impl(r, x);
}
double slp_eval(const AdditiveRepr& r, const std::vector<double>& x) {
  return eval_impl(r, x);
}
std::vector<Rational> slp_eval_steps(const AdditiveRepr& r, const std::vector<Rational>& x) {
  return eval_steps_impl(r, x);
}
std::vector<double> slp_eval_steps(const AdditiveRepr& r, const std::vector<double>& x) {
  return eval_steps_impl(r, x);
}

namespace {

void cap_check(const SparsePoly& p, std::size_t cap) {
  if (p.term_count() > cap)
    throw SizeCapExceeded("expansion exceeded the term-count cap of " + std::to_string(cap));
}

// (num, den) of x^e * prod q_i^{e'} with each q_i itself an Expansion.
struct Frac {
  SparsePoly num;
  SparsePoly den;
};

Frac monomial_frac(int arity, const ExponentVector& var_exp,
                   const std::vector<Expansion>& q, const ExponentVector& step_exp,
                   std::size_t cap) {
  Frac f{SparsePoly::constant(arity, Rational(1)), SparsePoly::constant(arity, Rational(1))};
  ExponentVector pos(arity, 0), neg(arity, 0);
  for (int i = 0; i < arity; ++i) {
    if (var_exp[i] >= 0) pos[i] = var_exp[i];
    else neg[i] = -var_exp[i];
  }
  f.num = SparsePoly::monomial(arity, pos, Rational(1));
  f.den = SparsePoly::monomial(arity, neg, Rational(1));
  for (std::size_t i = 0; i < step_exp.size(); ++i) {
    int e = step_exp[i];
    if (e == 0) continue;
    const SparsePoly& top = e > 0 ? q[i].num : q[i].den;
    const SparsePoly& bot = e > 0 ? q[i].den : q[i].num;
    int n = e > 0 ? e : -e;
    f.num = f.num * top.pow(n);
    cap_check(f.num, cap);
    f.den = f.den * bot.pow(n);
    cap_check(f.den, cap);
  }
  return f;
}

}  // namespace

Expansion slp_expand(const AdditiveRepr& r, std::size_t size_cap) {
  ValidationReport report = slp_validate(r);
  if (!report.valid)
    throw InvalidRepresentation("cannot expand an invalid representation: " +
                                report.issues.front().message);
  std::vector<Expansion> q;
  q.reserve(r.steps.size());
  for (const AddStep& s : r.steps) {
    Frac a = monomial_frac(r.arity, s.alpha, q, s.gamma, size_cap);
    Frac b = monomial_frac(r.arity, s.beta, q, s.delta, size_cap);
    Expansion e{a.num.scaled(s.u) * b.den + b.num.scaled(s.v) * a.den, a.den * b.den};
    cap_check(e.num, size_cap);
    cap_check(e.den, size_cap);
    q.push_back(std::move(e));
  }
  Frac f = monomial_frac(r.arity, r.final.zeta, q, r.final.eta, size_cap);
  Expansion result{f.num.scaled(r.final.c), f.den};
  if (result.den.is_zero()) throw DegenerateDenominator("denominator expands to zero");
  return result;
}

SparsePoly slp_expand_divfree(const AdditiveRepr& r, std::size_t size_cap) {
  ValidationReport report = slp_validate(r);
  if (!report.valid)
    throw InvalidRepresentation("invalid representation: " + report.issues.front().message);
  auto neg_free = [](const ExponentVector& e) { return all_nonneg(e); };
  for (const AddStep& s : r.steps)
    if (!neg_free(s.alpha) || !neg_free(s.beta) || !neg_free(s.gamma) || !neg_free(s.delta))
      throw InvalidRepresentation("negative exponent in division-free expansion");
  if (!neg_free(r.final.zeta) || !neg_free(r.final.eta))
    throw InvalidRepresentation("negative result exponent in division-free expansion");
  Expansion e = slp_expand(r, size_cap);
  // den is the constant 1 here by construction.
  return e.num;
}

int additive_complexity_witness(const AdditiveRepr& r) {
  ValidationReport report = slp_validate(r);
  if (!report.valid)
    throw InvalidRepresentation("invalid representation: " + report.issues.front().message);
  return r.length();
}

namespace {

// min(v, 0) componentwise: the denominator part pulled out of a step.
ExponentVector negative_part(const ExponentVector& a, const ExponentVector& b) {
  ExponentVector m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = std::min({a[i], b[i], 0});
  return m;
}

ExponentVector minus(const ExponentVector& a, const ExponentVector& b) {
  ExponentVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

}  // namespace

AdditiveRepr lemma31_normalize(const AdditiveRepr& r) {
  ValidationReport report = slp_validate(r);
  if (!report.valid)
    throw InvalidRepresentation("invalid representation: " + report.issues.front().message);

  // q_j = N_j * x^{m_j} * prod N_i^{w_ji}; the m/w monomials are the
  // accumulated denominators (entries <= 0 by construction).
  AdditiveRepr out;
  out.arity = r.arity;
  out.mode = SlpMode::Lemma31;
  std::vector<ExponentVector> m;  // per step, over variables
  std::vector<ExponentVector> w;  // per step, over earlier steps
  const int a = r.length();

  auto resolve = [&](const ExponentVector& var_exp, const ExponentVector& step_exp,
                     ExponentVector& x_out, ExponentVector& q_out) {
    // Substitutes q_i = N_i * x^{m_i} * prod N_l^{w_il}. The m/w monomials
    // are already over x and the N symbols, so one pass suffices.
    const int j = static_cast<int>(step_exp.size());
    x_out = var_exp;
    q_out.assign(j, 0);
    for (int i = 0; i < j; ++i) {
      int e = step_exp[i];
      q_out[i] += e;
      if (e == 0) continue;
      for (int t = 0; t < out.arity; ++t) x_out[t] += e * m[i][t];
      for (int l = 0; l < i; ++l) q_out[l] += e * w[i][l];
    }
  };

  for (int j = 0; j < a; ++j) {
    const AddStep& s = r.steps[j];
    ExponentVector e1, f1, e2, f2;
    resolve(s.alpha, s.gamma, e1, f1);
    resolve(s.beta, s.delta, e2, f2);
    ExponentVector mx = negative_part(e1, e2);
    ExponentVector mq = negative_part(f1, f2);
    out.steps.push_back({s.u, minus(e1, mx), minus(f1, mq), s.v, minus(e2, mx), minus(f2, mq)});
    m.push_back(std::move(mx));
    w.push_back(std::move(mq));
  }

  ExponentVector zx, zq;
  resolve(r.final.zeta, r.final.eta, zx, zq);
  out.final = {r.final.c, std::move(zx), std::move(zq)};
  return out;
}

namespace {

// Steps transitively referenced from the given result exponents.
std::vector<bool> reachable_steps(const AdditiveRepr& r, const ExponentVector& eta) {
  std::vector<bool> keep(r.steps.size(), false);
  std::vector<int> stack;
  for (std::size_t i = 0; i < eta.size(); ++i)
    if (eta[i] != 0) {
      keep[i] = true;
      stack.push_back(static_cast<int>(i));
    }
  while (!stack.empty()) {
    int j = stack.back();
    stack.pop_back();
    const AddStep& s = r.steps[j];
    for (int i = 0; i < j; ++i) {
      if ((s.gamma[i] != 0 || s.delta[i] != 0) && !keep[i]) {
        keep[i] = true;
        stack.push_back(i);
      }
    }
  }
  return keep;
}

// Division-free repr keeping only the flagged steps, with the given result line.
AdditiveRepr prune_to(const AdditiveRepr& r, const std::vector<bool>& keep,
                      const Rational& c, const ExponentVector& zeta, const ExponentVector& eta) {
  AdditiveRepr out;
  out.arity = r.arity;
  out.mode = SlpMode::DivisionFree;
  std::vector<int> new_index(r.steps.size(), -1);
  for (std::size_t j = 0; j < r.steps.size(); ++j) {
    if (!keep[j]) continue;
    new_index[j] = out.length();
    const AddStep& s = r.steps[j];
    AddStep t{s.u, s.alpha, {}, s.v, s.beta, {}};
    t.gamma.resize(out.length(), 0);
    t.delta.resize(out.length(), 0);
    for (int i = 0; i < static_cast<int>(j); ++i) {
      if (new_index[i] < 0) continue;
      t.gamma[new_index[i]] = s.gamma[i];
      t.delta[new_index[i]] = s.delta[i];
    }
    out.steps.push_back(std::move(t));
  }
  out.final.c = c;
  out.final.zeta = zeta;
  out.final.eta.assign(out.length(), 0);
  for (std::size_t i = 0; i < eta.size(); ++i)
    if (eta[i] != 0) out.final.eta[new_index[i]] = eta[i];
  return out;
}

}  // namespace

RationalFunctionPair quotient_form(const AdditiveRepr& r) {
  ValidationReport report = slp_validate(r);
  if (!report.valid)
    throw InvalidRepresentation("invalid representation: " + report.issues.front().message);

  AdditiveRepr one;
  one.arity = r.arity;
  one.mode = SlpMode::DivisionFree;
  one.final = {Rational(1), ExponentVector(r.arity, 0), {}};

  if (r.mode == SlpMode::DivisionFree) {
    AdditiveRepr num = r;  // identity case: the input is already a polynomial
    return {std::move(num), std::move(one)};
  }

  AdditiveRepr n = lemma31_normalize(r);
  ExponentVector zeta_pos(n.arity, 0), zeta_neg(n.arity, 0);
  for (int i = 0; i < n.arity; ++i) {
    if (n.final.zeta[i] >= 0) zeta_pos[i] = n.final.zeta[i];
    else zeta_neg[i] = -n.final.zeta[i];
  }
  ExponentVector eta_pos(n.length(), 0), eta_neg(n.length(), 0);
  for (int i = 0; i < n.length(); ++i) {
    if (n.final.eta[i] >= 0) eta_pos[i] = n.final.eta[i];
    else eta_neg[i] = -n.final.eta[i];
  }

  RationalFunctionPair pair{
      prune_to(n, reachable_steps(n, eta_pos), n.final.c, zeta_pos, eta_pos),
      prune_to(n, reachable_steps(n, eta_neg), Rational(1), zeta_neg, eta_neg)};
  Expansion den = slp_expand(pair.den);
  if (den.num.is_zero()) throw DegenerateDenominator("denominator expands to zero");
  return pair;
}

AdditiveRepr naive_repr(const SparsePoly& p) {
  AdditiveRepr r;
  r.arity = p.arity();
  r.mode = SlpMode::DivisionFree;
  ExponentVector zero(r.arity, 0);
  if (p.is_zero()) {
    r.final = {Rational(0), zero, {}};
    return r;
  }
  std::vector<std::pair<ExponentVector, Rational>> terms(p.terms().begin(), p.terms().end());
  if (terms.size() == 1) {
    r.final = {terms[0].second, terms[0].first, {}};
    return r;
  }
  // Partial-sum chain: one addition per extra term.
  r.steps.push_back({terms[0].second, terms[0].first, {}, terms[1].second, terms[1].first, {}});
  for (std::size_t t = 2; t < terms.size(); ++t) {
    ExponentVector gamma(t - 1, 0), deltaz(t - 1, 0);
    gamma[t - 2] = 1;
    r.steps.push_back({Rational(1), zero, std::move(gamma), terms[t].second, terms[t].first,
                       std::move(deltaz)});
  }
  ExponentVector eta(r.length(), 0);
  eta.back() = 1;
  r.final = {Rational(1), zero, std::move(eta)};
  return r;
}

AdditiveRepr embed_repr(const AdditiveRepr& r, int new_arity, int offset) {
  if (offset < 0 || offset + r.arity > new_arity)
    throw std::invalid_argument("embed_repr out of range");
  auto lift = [&](const ExponentVector& e) {
    ExponentVector f(new_arity, 0);
    std::copy(e.begin(), e.end(), f.begin() + offset);
    return f;
  };
  AdditiveRepr out = r;
  out.arity = new_arity;
  for (AddStep& s : out.steps) {
    s.alpha = lift(s.alpha);
    s.beta = lift(s.beta);
  }
  out.final.zeta = lift(out.final.zeta);
  return out;
}

namespace {

void write_exponents(std::ostream& out, const ExponentVector& e) {
  out << '[';
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) out << ',';
    out << e[i];
  }
  out << ']';
}

}  // namespace

std::string slp_to_text(const AdditiveRepr& r) {
  std::ostringstream out;
  out << "slp arity=" << r.arity << " mode=" << to_string(r.mode) << '\n';
  for (int j = 0; j < r.length(); ++j) {
    const AddStep& s = r.steps[j];
    out << "step " << (j + 1) << ": " << rational_to_string(s.u) << " * x^";
    write_exponents(out, s.alpha);
    out << " * q^";
    write_exponents(out, s.gamma);
    out << " + " << rational_to_string(s.v) << " * x^";
    write_exponents(out, s.beta);
    out << " * q^";
    write_exponents(out, s.delta);
    out << '\n';
  }
  out << "result: " << rational_to_string(r.final.c) << " * x^";
  write_exponents(out, r.final.zeta);
  out << " * q^";
  write_exponents(out, r.final.eta);
  out << '\n';
  return out.str();
}

namespace {

struct SlpTextParser {
  std::string line;
  std::size_t pos = 0;
  int lineno = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("slp text error on line " + std::to_string(lineno) + ": " + msg);
  }

  void skip_ws() {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
  }

  void expect(const std::string& token) {
    skip_ws();
    if (line.compare(pos, token.size(), token) != 0) fail("expected '" + token + "'");
    pos += token.size();
  }

  bool try_expect(const std::string& token) {
    skip_ws();
    if (line.compare(pos, token.size(), token) != 0) return false;
    pos += token.size();
    return true;
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos;
    if (pos < line.size() && (line[pos] == '-' || line[pos] == '+')) ++pos;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos == start) fail("expected integer");
    return std::stoi(line.substr(start, pos - start));
  }

  Rational parse_rat() {
    skip_ws();
    std::size_t start = pos;
    if (pos < line.size() && (line[pos] == '-' || line[pos] == '+')) ++pos;
    while (pos < line.size() &&
           (std::isdigit(static_cast<unsigned char>(line[pos])) || line[pos] == '/' ||
            line[pos] == '.'))
      ++pos;
    auto q = parse_rational(line.substr(start, pos - start));
    if (!q) fail("bad rational literal");
    return *q;
  }

  ExponentVector parse_exponents() {
    expect("[");
    ExponentVector e;
    skip_ws();
    if (try_expect("]")) return e;
    e.push_back(parse_int());
    while (try_expect(",")) e.push_back(parse_int());
    expect("]");
    return e;
  }

  void done() {
    skip_ws();
    if (pos != line.size()) fail("unexpected trailing input");
  }
};

}  // namespace

AdditiveRepr slp_from_text(const std::string& text) {
  std::istringstream in(text);
  SlpTextParser p;
  AdditiveRepr r;
  bool saw_header = false, saw_result = false;
  while (std::getline(in, p.line)) {
    ++p.lineno;
    p.pos = 0;
    p.skip_ws();
    if (p.pos == p.line.size() || p.line[p.pos] == '#') continue;
    if (!saw_header) {
      p.expect("slp");
      p.expect("arity=");
      r.arity = p.parse_int();
      p.expect("mode=");
      if (p.try_expect("division-free")) r.mode = SlpMode::DivisionFree;
      else if (p.try_expect("lemma31")) r.mode = SlpMode::Lemma31;
      else if (p.try_expect("general")) r.mode = SlpMode::General;
      else p.fail("unknown mode");
      p.done();
      saw_header = true;
      continue;
    }
    if (saw_result) p.fail("content after result line");
    if (p.try_expect("step")) {
      int j = p.parse_int();
      if (j != r.length() + 1) p.fail("steps must be numbered consecutively from 1");
      p.expect(":");
      AddStep s;
      s.u = p.parse_rat();
      p.expect("*");
      p.expect("x^");
      s.alpha = p.parse_exponents();
      p.expect("*");
      p.expect("q^");
      s.gamma = p.parse_exponents();
      p.expect("+");
      s.v = p.parse_rat();
      p.expect("*");
      p.expect("x^");
      s.beta = p.parse_exponents();
      p.expect("*");
      p.expect("q^");
      s.delta = p.parse_exponents();
      p.done();
      r.steps.push_back(std::move(s));
      continue;
    }
    p.expect("result:");
    r.final.c = p.parse_rat();
    p.expect("*");
    p.expect("x^");
    r.final.zeta = p.parse_exponents();
    p.expect("*");
    p.expect("q^");
    r.final.eta = p.parse_exponents();
    p.done();
    saw_result = true;
  }
  if (!saw_header) throw std::invalid_argument("slp text error: missing header line");
  if (!saw_result) throw std::invalid_argument("slp text error: missing result line");
  return r;
}

}  // namespace salt
