#include "salt/formula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace salt {

std::string to_string(Rel rel) {
  switch (rel) {
    case Rel::Eq: return "=";
    case Rel::Lt: return "<";
    case Rel::Gt: return ">";
    case Rel::Le: return "<=";
    case Rel::Ge: return ">=";
  }
  return "?";
}

bool is_strict(Rel rel) { return rel == Rel::Lt || rel == Rel::Gt; }

Formula Formula::make_atom(int poly_ref, Rel rel) {
  Formula f;
  f.kind = Kind::Atom;
  f.atom = {poly_ref, rel};
  return f;
}

Formula Formula::make_and(std::vector<Formula> children) {
  if (children.empty()) throw std::invalid_argument("empty conjunction");
  if (children.size() == 1) return std::move(children.front());
  Formula f;
  f.kind = Kind::And;
  f.children = std::move(children);
  return f;
}

Formula Formula::make_or(std::vector<Formula> children) {
  if (children.empty()) throw std::invalid_argument("empty disjunction");
  if (children.size() == 1) return std::move(children.front());
  Formula f;
  f.kind = Kind::Or;
  f.children = std::move(children);
  return f;
}

Formula Formula::make_not(Formula child) {
  Formula f;
  f.kind = Kind::Not;
  f.children.push_back(std::move(child));
  return f;
}

int FormulaDoc::add_poly(const SparsePoly& p) {
  for (std::size_t i = 0; i < poly_table.size(); ++i)
    if (poly_table[i].poly == p) return static_cast<int>(i);
  poly_table.push_back({p, std::nullopt});
  return static_cast<int>(poly_table.size()) - 1;
}

int FormulaDoc::add_poly(const SparsePoly& p, AdditiveRepr repr) {
  for (std::size_t i = 0; i < poly_table.size(); ++i)
    if (poly_table[i].poly == p) {
      // Keep the shorter witness when the polynomial is already present.
      if (!poly_table[i].repr || repr.length() < poly_table[i].repr->length())
        poly_table[i].repr = std::move(repr);
      return static_cast<int>(i);
    }
  poly_table.push_back({p, std::move(repr)});
  return static_cast<int>(poly_table.size()) - 1;
}

namespace {

// The DSL is ambiguous at '(' — it can open a subformula or a parenthesized
// polynomial. A depth-0 scan for a relation symbol before a connective
// decides: relations only occur inside atoms.
class FormulaParser {
 public:
  FormulaParser(const std::string& text, int expected_arity)
      : text_(text), arity_(expected_arity) {}

  FormulaDoc parse() {
    if (arity_ == 0) {
      for (std::size_t i = 0; i + 1 < text_.size(); ++i) {
        if (text_[i] == 'x' && std::isdigit(static_cast<unsigned char>(text_[i + 1]))) {
          int idx = 0;
          std::size_t j = i + 1;
          while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j])))
            idx = idx * 10 + (text_[j++] - '0');
          arity_ = std::max(arity_, idx);
        }
      }
      if (arity_ == 0) fail("no variables found and no arity given");
    }
    doc_.arity = arity_;
    doc_.root = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("formula syntax error at position " +
                                std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Formula parse_or() {
    std::vector<Formula> parts;
    parts.push_back(parse_and());
    while (eat('|')) parts.push_back(parse_and());
    return Formula::make_or(std::move(parts));
  }

  Formula parse_and() {
    std::vector<Formula> parts;
    parts.push_back(parse_unary());
    while (eat('&')) parts.push_back(parse_unary());
    return Formula::make_and(std::move(parts));
  }

  Formula parse_unary() {
    if (eat('!')) return Formula::make_not(parse_unary());
    if (peek() == '(' && !paren_opens_atom()) {
      ++pos_;
      Formula f = parse_or();
      if (!eat(')')) fail("expected ')'");
      return f;
    }
    return parse_atom();
  }

  // At a '(': true when the parenthesized group belongs to a polynomial.
  // Polynomial text never contains relation symbols, so the first relation
  // decides: at depth 0 it closes this atom, at depth >= 1 the group was a
  // subformula. A depth-0 connective before any relation also means subformula.
  bool paren_opens_atom() {
    int depth = 0;
    for (std::size_t i = pos_; i < text_.size(); ++i) {
      char c = text_[i];
      if (c == '(') ++depth;
      else if (c == ')') {
        if (--depth < 0) return false;
      } else if (c == '=' || c == '<' || c == '>') {
        return depth == 0;
      } else if (depth == 0 && (c == '&' || c == '|' || c == '!')) {
        return false;
      }
    }
    return false;
  }

  Formula parse_atom() {
    skip_ws();
    std::size_t start = pos_;
    int depth = 0;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '(') ++depth;
      else if (c == ')') {
        if (depth == 0) break;
        --depth;
      } else if (depth == 0 && (c == '=' || c == '<' || c == '>')) {
        break;
      } else if (depth == 0 && (c == '&' || c == '|' || c == '!')) {
        fail("expected a relation in atom");
      }
      ++pos_;
    }
    std::string poly_text = text_.substr(start, pos_ - start);
    Rel rel;
    if (eat('<')) rel = eat('=') ? Rel::Le : Rel::Lt;
    else if (eat('>')) rel = eat('=') ? Rel::Ge : Rel::Gt;
    else if (eat('=')) rel = Rel::Eq;
    else fail("expected relation");
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '0') fail("atom right-hand side must be 0");
    ++pos_;
    SparsePoly p(arity_);
    try {
      p = parse_poly(poly_text, arity_);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("formula syntax error at position " +
                                  std::to_string(start) + ": " + e.what());
    }
    return Formula::make_atom(doc_.add_poly(p), rel);
  }

  const std::string& text_;
  int arity_;
  std::size_t pos_ = 0;
  FormulaDoc doc_{0, {}, Formula::make_atom(0, Rel::Eq), false};
};

void serialize_node(const FormulaDoc& doc, const Formula& f, std::ostream& out, int parent_prec) {
  // Precedence: Or=1, And=2, Not=3, Atom=4.
  switch (f.kind) {
    case Formula::Kind::Atom:
      out << doc.poly_table[f.atom.poly_ref].poly.to_string() << ' '
          << to_string(f.atom.rel) << " 0";
      break;
    case Formula::Kind::Not:
      out << '!';
      if (f.children[0].kind == Formula::Kind::Atom) {
        out << '(';
        serialize_node(doc, f.children[0], out, 0);
        out << ')';
      } else {
        serialize_node(doc, f.children[0], out, 3);
      }
      break;
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      int prec = f.kind == Formula::Kind::And ? 2 : 1;
      bool need_parens = prec <= parent_prec;
      if (need_parens) out << '(';
      const char* sep = f.kind == Formula::Kind::And ? " & " : " | ";
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i) out << sep;
        serialize_node(doc, f.children[i], out, prec);
      }
      if (need_parens) out << ')';
      break;
    }
  }
}

}  // namespace

FormulaDoc parse_formula(const std::string& text, int expected_arity) {
  return FormulaParser(text, expected_arity).parse();
}

std::string serialize_formula(const FormulaDoc& doc) {
  std::ostringstream out;
  serialize_node(doc, doc.root, out, 0);
  return out.str();
}

namespace {

nlohmann::json poly_to_json(const SparsePoly& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [e, c] : p.terms())
    terms.push_back({{"e", e}, {"c", rational_to_string(c)}});
  return {{"arity", p.arity()}, {"terms", terms}};
}

SparsePoly poly_from_json(const nlohmann::json& j) {
  SparsePoly p(j.at("arity").get<int>());
  for (const auto& t : j.at("terms")) {
    auto c = parse_rational(t.at("c").get<std::string>());
    if (!c) throw std::invalid_argument("bad coefficient in JSON polynomial");
    p.add_term(t.at("e").get<ExponentVector>(), *c);
  }
  return p;
}

nlohmann::json node_to_json(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::Atom:
      return {{"kind", "atom"}, {"poly", f.atom.poly_ref}, {"rel", to_string(f.atom.rel)}};
    case Formula::Kind::Not:
      return {{"kind", "not"}, {"child", node_to_json(f.children[0])}};
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      nlohmann::json kids = nlohmann::json::array();
      for (const auto& c : f.children) kids.push_back(node_to_json(c));
      return {{"kind", f.kind == Formula::Kind::And ? "and" : "or"}, {"children", kids}};
    }
  }
  throw std::logic_error("unreachable");
}

Formula node_from_json(const nlohmann::json& j, int table_size) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "atom") {
    int ref = j.at("poly").get<int>();
    if (ref < 0 || ref >= table_size) throw std::invalid_argument("atom poly index out of range");
    const std::string rel = j.at("rel").get<std::string>();
    Rel r;
    if (rel == "=") r = Rel::Eq;
    else if (rel == "<") r = Rel::Lt;
    else if (rel == ">") r = Rel::Gt;
    else if (rel == "<=") r = Rel::Le;
    else if (rel == ">=") r = Rel::Ge;
    else throw std::invalid_argument("unknown relation in JSON formula");
    return Formula::make_atom(ref, r);
  }
  if (kind == "not") return Formula::make_not(node_from_json(j.at("child"), table_size));
  std::vector<Formula> kids;
  for (const auto& c : j.at("children")) kids.push_back(node_from_json(c, table_size));
  if (kids.empty()) throw std::invalid_argument("empty connective in JSON formula");
  if (kind == "and") return Formula::make_and(std::move(kids));
  if (kind == "or") return Formula::make_or(std::move(kids));
  throw std::invalid_argument("unknown node kind in JSON formula");
}

}  // namespace

nlohmann::json doc_to_json(const FormulaDoc& doc) {
  nlohmann::json polys = nlohmann::json::array();
  for (const auto& entry : doc.poly_table) {
    nlohmann::json p = poly_to_json(entry.poly);
    if (entry.repr) p["slp"] = slp_to_text(*entry.repr);
    polys.push_back(std::move(p));
  }
  return {{"arity", doc.arity},
          {"family", doc.is_family},
          {"polys", polys},
          {"root", node_to_json(doc.root)}};
}

FormulaDoc doc_from_json(const nlohmann::json& j) {
  FormulaDoc doc;
  doc.arity = j.at("arity").get<int>();
  doc.is_family = j.value("family", false);
  for (const auto& p : j.at("polys")) {
    PolyEntry entry{poly_from_json(p), std::nullopt};
    if (entry.poly.arity() != doc.arity)
      throw std::invalid_argument("polynomial arity differs from document arity");
    if (p.contains("slp")) entry.repr = slp_from_text(p.at("slp").get<std::string>());
    doc.poly_table.push_back(std::move(entry));
  }
  doc.root = node_from_json(j.at("root"), static_cast<int>(doc.poly_table.size()));
  return doc;
}

namespace {

bool atom_holds(Rel rel, int sign) {
  switch (rel) {
    case Rel::Eq: return sign == 0;
    case Rel::Lt: return sign < 0;
    case Rel::Gt: return sign > 0;
    case Rel::Le: return sign <= 0;
    case Rel::Ge: return sign >= 0;
  }
  return false;
}

template <typename Sign>
bool eval_node(const Formula& f, Sign&& sign_of) {
  switch (f.kind) {
    case Formula::Kind::Atom:
      return atom_holds(f.atom.rel, sign_of(f.atom));
    case Formula::Kind::Not:
      return !eval_node(f.children[0], sign_of);
    case Formula::Kind::And:
      for (const auto& c : f.children)
        if (!eval_node(c, sign_of)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& c : f.children)
        if (eval_node(c, sign_of)) return true;
      return false;
  }
  return false;
}

}  // namespace

bool eval_formula(const FormulaDoc& doc, const std::vector<Rational>& x) {
  if (static_cast<int>(x.size()) != doc.arity) throw ArityMismatch("point length");
  return eval_node(doc.root, [&](const Atom& a) {
    Rational v = doc.poly_table[a.poly_ref].poly.eval(x);
    return v == 0 ? 0 : (v < 0 ? -1 : 1);
  });
}

bool eval_formula_relaxed(const FormulaDoc& doc, const std::vector<double>& x, double tau) {
  if (static_cast<int>(x.size()) != doc.arity) throw ArityMismatch("point length");
  return eval_node(doc.root, [&](const Atom& a) {
    double v = doc.poly_table[a.poly_ref].poly.eval(x);
    if (a.rel == Rel::Eq) return std::abs(v) <= tau ? 0 : (v < 0 ? -1 : 1);
    return v == 0.0 ? 0 : (v < 0 ? -1 : 1);
  });
}

FormatRecord measure_format(const FormulaDoc& doc) {
  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  std::vector<bool> used(doc.poly_table.size(), false);
  for (const Atom* a : atoms) used[a->poly_ref] = true;

  FormatRecord rec;
  rec.k = doc.arity;
  for (std::size_t i = 0; i < doc.poly_table.size(); ++i) {
    if (!used[i]) continue;
    const PolyEntry& entry = doc.poly_table[i];
    ++rec.s;
    auto deg = entry.poly.degree();
    if (deg && (!rec.d || *deg > *rec.d)) rec.d = deg;
    if (entry.repr) {
      rec.a += entry.repr->length();
      if (entry.repr->mode != SlpMode::DivisionFree) rec.divfree = false;
    } else {
      rec.a += naive_repr(entry.poly).length();
      rec.naive_used = true;
    }
  }
  return rec;
}

bool is_pclosed(const FormulaDoc& doc) {
  bool closed = true;
  struct Walker {
    bool* closed;
    void walk(const Formula& f) {
      if (f.kind == Formula::Kind::Not) *closed = false;
      if (f.kind == Formula::Kind::Atom && is_strict(f.atom.rel)) *closed = false;
      for (const auto& c : f.children) walk(c);
    }
  } w{&closed};
  w.walk(doc.root);
  return closed;
}

namespace {

// Sign-pattern formula for a monomial atom over the bare variables.
Formula monomial_sign_formula(FormulaDoc& out, const ExponentVector& e, bool coef_positive,
                              Rel rel) {
  std::vector<int> odd, even;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    (e[i] % 2 ? odd : even).push_back(static_cast<int>(i));
  }
  auto var_atom = [&](int var, Rel r) {
    return Formula::make_atom(out.add_poly(SparsePoly::variable(out.arity, var)), r);
  };

  if (rel == Rel::Eq) {
    std::vector<Formula> zeros;
    for (int v : odd) zeros.push_back(var_atom(v, Rel::Eq));
    for (int v : even) zeros.push_back(var_atom(v, Rel::Eq));
    return Formula::make_or(std::move(zeros));
  }
  if (rel == Rel::Le)
    return Formula::make_or({monomial_sign_formula(out, e, coef_positive, Rel::Lt),
                             monomial_sign_formula(out, e, coef_positive, Rel::Eq)});
  if (rel == Rel::Ge)
    return Formula::make_or({monomial_sign_formula(out, e, coef_positive, Rel::Gt),
                             monomial_sign_formula(out, e, coef_positive, Rel::Eq)});

  // Strict sign: an even (Gt) or odd (Lt) number of negative odd-degree
  // variables, all other participating variables nonzero.
  bool want_even = (rel == Rel::Gt) == coef_positive;
  std::vector<Formula> patterns;
  const int n = static_cast<int>(odd.size());
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if ((__builtin_popcount(mask) % 2 == 0) != want_even) continue;
    std::vector<Formula> conj;
    for (int i = 0; i < n; ++i)
      conj.push_back(var_atom(odd[i], (mask >> i) & 1 ? Rel::Lt : Rel::Gt));
    for (int v : even)
      conj.push_back(Formula::make_or({var_atom(v, Rel::Lt), var_atom(v, Rel::Gt)}));
    if (conj.empty()) continue;  // constant monomial cannot reach here (degree > 0)
    patterns.push_back(Formula::make_and(std::move(conj)));
  }
  if (patterns.empty()) {
    // No odd variable and the wanted parity is odd: impossible sign.
    // Encode "false" as x < 0 & x > 0 on the first participating variable.
    int v = even.front();
    return Formula::make_and({var_atom(v, Rel::Lt), var_atom(v, Rel::Gt)});
  }
  return Formula::make_or(std::move(patterns));
}

Formula rewrite_node(const FormulaDoc& in, FormulaDoc& out, const Formula& f) {
  if (f.kind != Formula::Kind::Atom) {
    Formula g;
    g.kind = f.kind;
    g.atom = f.atom;
    for (const auto& c : f.children) g.children.push_back(rewrite_node(in, out, c));
    return g;
  }
  const PolyEntry& entry = in.poly_table[f.atom.poly_ref];
  const SparsePoly& p = entry.poly;
  if (!p.is_monomial() || p.degree() <= 0) {
    int ref = entry.repr ? out.add_poly(p, *entry.repr) : out.add_poly(p);
    return Formula::make_atom(ref, f.atom.rel);
  }
  const auto& [e, c] = *p.terms().begin();
  return monomial_sign_formula(out, e, c > 0, f.atom.rel);
}

}  // namespace

FormulaDoc monomial_atom_rewrite(const FormulaDoc& doc) {
  FormulaDoc out;
  out.arity = doc.arity;
  out.is_family = doc.is_family;
  out.root = rewrite_node(doc, out, doc.root);
  return out;
}

FormulaDoc fix_last_variable(const FormulaDoc& doc, const Rational& value) {
  if (doc.arity < 1) throw std::invalid_argument("fix_last_variable needs a variable");
  FormulaDoc out;
  out.arity = doc.arity - 1;
  struct Rewriter {
    const FormulaDoc* in;
    FormulaDoc* out;
    const Rational* value;
    Formula walk(const Formula& f) {
      if (f.kind == Formula::Kind::Atom) {
        SparsePoly fixed = in->poly_table[f.atom.poly_ref].poly.substitute_last(*value);
        return Formula::make_atom(out->add_poly(fixed), f.atom.rel);
      }
      Formula g;
      g.kind = f.kind;
      for (const auto& c : f.children) g.children.push_back(walk(c));
      return g;
    }
  } rw{&doc, &out, &value};
  out.root = rw.walk(doc.root);
  return out;
}

void collect_atoms(const Formula& f, std::vector<const Atom*>& out) {
  if (f.kind == Formula::Kind::Atom) {
    out.push_back(&f.atom);
    return;
  }
  for (const auto& c : f.children) collect_atoms(c, out);
}

bool formula_equal(const Formula& a, const Formula& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Formula::Kind::Atom)
    return a.atom.poly_ref == b.atom.poly_ref && a.atom.rel == b.atom.rel;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!formula_equal(a.children[i], b.children[i])) return false;
  return true;
}

}  // namespace salt
