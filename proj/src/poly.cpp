#include "salt/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace salt {

int total_degree(const ExponentVector& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

bool GrlexLess::operator()(const ExponentVector& a, const ExponentVector& b) const {
  int da = total_degree(a), db = total_degree(b);
  if (da != db) return da > db;  // higher degree first
  return a < b;
}

SparsePoly SparsePoly::constant(int arity, const Rational& c) {
  SparsePoly p(arity);
  p.add_term(ExponentVector(arity, 0), c);
  return p;
}

SparsePoly SparsePoly::variable(int arity, int index) {
  if (index < 0 || index >= arity) throw std::invalid_argument("variable index out of range");
  ExponentVector e(arity, 0);
  e[index] = 1;
  return monomial(arity, std::move(e), Rational(1));
}

SparsePoly SparsePoly::monomial(int arity, ExponentVector e, const Rational& c) {
  SparsePoly p(arity);
  p.add_term(e, c);
  return p;
}

bool SparsePoly::is_constant() const {
  return terms_.empty() ||
         (terms_.size() == 1 && total_degree(terms_.begin()->first) == 0);
}

std::optional<int> SparsePoly::degree() const {
  if (terms_.empty()) return std::nullopt;
  // Grlex keeps the highest-degree terms first.
  return total_degree(terms_.begin()->first);
}

void SparsePoly::add_term(const ExponentVector& e, const Rational& c) {
  if (static_cast<int>(e.size()) != arity_) throw ArityMismatch("exponent vector length");
  for (int v : e)
    if (v < 0) throw std::invalid_argument("negative exponent in polynomial");
  if (c == 0) return;
  auto [it, inserted] = terms_.emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

SparsePoly SparsePoly::operator-() const {
  SparsePoly r(arity_);
  for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
  return r;
}

SparsePoly& SparsePoly::operator+=(const SparsePoly& o) {
  if (arity_ != o.arity_) throw ArityMismatch("polynomial arity mismatch in add");
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

SparsePoly& SparsePoly::operator-=(const SparsePoly& o) {
  if (arity_ != o.arity_) throw ArityMismatch("polynomial arity mismatch in sub");
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

SparsePoly operator*(const SparsePoly& a, const SparsePoly& b) {
  if (a.arity_ != b.arity_) throw ArityMismatch("polynomial arity mismatch in mul");
  SparsePoly r(a.arity_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      ExponentVector e(a.arity_);
      for (int i = 0; i < a.arity_; ++i) e[i] = ea[i] + eb[i];
      r.add_term(e, ca * cb);
    }
  }
  return r;
}

SparsePoly SparsePoly::scaled(const Rational& c) const {
  SparsePoly r(arity_);
  if (c == 0) return r;
  for (const auto& [e, coef] : terms_) r.terms_.emplace(e, coef * c);
  return r;
}

SparsePoly SparsePoly::pow(int n) const {
  if (n < 0) throw std::invalid_argument("negative polynomial power");
  SparsePoly result = constant(arity_, Rational(1));
  SparsePoly base = *this;
  while (n > 0) {
    if (n & 1) result = result * base;
    base = (n >>= 1) ? base * base : base;
  }
  return result;
}

Rational SparsePoly::eval(const std::vector<Rational>& x) const {
  if (static_cast<int>(x.size()) != arity_) throw ArityMismatch("point length");
  Rational sum(0);
  for (const auto& [e, c] : terms_) {
    Rational t = c;
    for (int i = 0; i < arity_; ++i) {
      for (int j = 0; j < e[i]; ++j) t *= x[i];
    }
    sum += t;
  }
  return sum;
}

double SparsePoly::eval(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != arity_) throw ArityMismatch("point length");
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = to_double(c);
    for (int i = 0; i < arity_; ++i) {
      if (e[i] == 1) t *= x[i];
      else if (e[i] > 1) t *= std::pow(x[i], e[i]);
    }
    sum += t;
  }
  return sum;
}

SparsePoly SparsePoly::derivative(int var) const {
  if (var < 0 || var >= arity_) throw std::invalid_argument("derivative variable out of range");
  SparsePoly r(arity_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    ExponentVector d = e;
    --d[var];
    r.add_term(d, c * e[var]);
  }
  return r;
}

SparsePoly SparsePoly::embed(int new_arity, int offset) const {
  if (offset < 0 || offset + arity_ > new_arity) throw std::invalid_argument("embed out of range");
  SparsePoly r(new_arity);
  for (const auto& [e, c] : terms_) {
    ExponentVector f(new_arity, 0);
    std::copy(e.begin(), e.end(), f.begin() + offset);
    r.terms_.emplace(std::move(f), c);
  }
  return r;
}

SparsePoly SparsePoly::substitute_last(const Rational& value) const {
  if (arity_ == 0) throw std::invalid_argument("substitute_last on 0-ary polynomial");
  SparsePoly r(arity_ - 1);
  for (const auto& [e, c] : terms_) {
    Rational coef = c;
    for (int j = 0; j < e[arity_ - 1]; ++j) coef *= value;
    ExponentVector f(e.begin(), e.end() - 1);
    r.add_term(f, coef);
  }
  return r;
}

std::string SparsePoly::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    Rational a = c;
    if (first) {
      if (a < 0) {
        out << "-";
        a = -a;
      }
    } else {
      out << (a < 0 ? " - " : " + ");
      if (a < 0) a = -a;
    }
    first = false;
    bool has_vars = total_degree(e) > 0;
    if (!has_vars || a != 1) {
      out << rational_to_string(a);
      if (has_vars) out << "*";
    }
    bool first_var = true;
    for (int i = 0; i < arity_; ++i) {
      if (e[i] == 0) continue;
      if (!first_var) out << "*";
      first_var = false;
      out << "x" << (i + 1);
      if (e[i] > 1) out << "^" << e[i];
    }
  }
  return out.str();
}

namespace {

// Recursive-descent parser for the shared polynomial syntax.
class PolyParser {
 public:
  PolyParser(const std::string& text, int expected_arity)
      : text_(text), arity_(expected_arity) {}

  SparsePoly parse() {
    // Two-pass when the arity is inferred: scan variable indices first.
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
    }
    SparsePoly p = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("polynomial syntax error at position " +
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

  SparsePoly parse_expr() {
    bool neg = false;
    skip_ws();
    if (eat('-')) neg = true;
    else eat('+');
    SparsePoly p = parse_term();
    if (neg) p = -p;
    for (;;) {
      if (eat('+')) p += parse_term();
      else if (eat('-')) p -= parse_term();
      else break;
    }
    return p;
  }

  SparsePoly parse_term() {
    SparsePoly p = parse_factor();
    while (eat('*')) p = p * parse_factor();
    return p;
  }

  SparsePoly parse_factor() {
    SparsePoly base = parse_atom();
    if (eat('^')) {
      int n = parse_nat();
      base = base.pow(n);
    }
    return base;
  }

  int parse_nat() {
    skip_ws();
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail("expected natural-number exponent");
    long n = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      n = n * 10 + (text_[pos_] - '0');
      if (n > 1'000'000) fail("exponent too large");
      ++pos_;
    }
    return static_cast<int>(n);
  }

  SparsePoly parse_atom() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      SparsePoly p = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (c == 'x') {
      ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        fail("expected variable index after 'x'");
      int idx = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        idx = idx * 10 + (text_[pos_++] - '0');
      if (idx < 1 || idx > arity_) fail("variable x" + std::to_string(idx) + " out of range");
      return SparsePoly::variable(arity_, idx - 1);
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
              text_[pos_] == '/'))
        ++pos_;
      auto q = parse_rational(text_.substr(start, pos_ - start));
      if (!q) {
        pos_ = start;
        fail("bad numeric literal");
      }
      return SparsePoly::constant(arity_, *q);
    }
    fail("expected factor");
  }

  const std::string& text_;
  int arity_;
  std::size_t pos_ = 0;
};

}  // namespace

SparsePoly parse_poly(const std::string& text, int expected_arity) {
  return PolyParser(text, expected_arity).parse();
}

}  // namespace salt
