#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "salt/poly.hpp"

using namespace salt;

namespace {

SparsePoly random_poly(std::mt19937_64& rng, int arity, int terms, int max_exp) {
  std::uniform_int_distribution<int> exp(0, max_exp);
  std::uniform_int_distribution<int> coef(-9, 9);
  SparsePoly p(arity);
  for (int t = 0; t < terms; ++t) {
    ExponentVector e(arity);
    for (int& v : e) v = exp(rng);
    p.add_term(e, Rational(coef(rng)));
  }
  return p;
}

std::vector<Rational> random_point(std::mt19937_64& rng, int arity) {
  std::uniform_int_distribution<long> num(-1000, 1000);
  std::uniform_int_distribution<long> den(1, 50);
  std::vector<Rational> x(arity);
  for (auto& v : x) v = Rational(num(rng), den(rng));
  return x;
}

}  // namespace

TEST_CASE("rational parsing") {
  CHECK(*parse_rational("3/4") == Rational(3, 4));
  CHECK(*parse_rational("-3/4") == Rational(-3, 4));
  CHECK(*parse_rational("0.005") == Rational(1, 200));
  CHECK(*parse_rational("42") == Rational(42));
  CHECK(!parse_rational("1/0"));
  CHECK(!parse_rational("x"));
  CHECK(!parse_rational(""));
  CHECK(rational_to_string(Rational(-3, 4)) == "-3/4");
  CHECK(rational_to_string(Rational(5)) == "5");
  CHECK(rational_from_double(0.25) == Rational(1, 4));
  CHECK(rational_from_double(-3.0) == Rational(-3));
}

TEST_CASE("(x+1)^3 expands to the binomial") {
  SparsePoly p = parse_poly("(x1+1)^3", 1);
  CHECK(p == parse_poly("x1^3+3*x1^2+3*x1+1", 1));
  CHECK(p.degree() == 3);
  CHECK(p.term_count() == 4);
}

TEST_CASE("x*(x^2+y^2-1) multiplies out") {
  SparsePoly f1 = parse_poly("x1", 2) * parse_poly("x1^2+x2^2-1", 2);
  CHECK(f1 == parse_poly("x1^3+x1*x2^2-x1", 2));
}

TEST_CASE("pow equals iterated multiplication") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    SparsePoly p = random_poly(rng, 3, 3, 3);
    SparsePoly by_pow = p.pow(4);
    SparsePoly by_mul = p * p * p * p;
    CHECK(by_pow == by_mul);
  }
}

TEST_CASE("evaluation") {
  CHECK(parse_poly("x1^2+x2^2-1", 2).eval({Rational(0), Rational(1)}) == 0);
  CHECK(parse_poly("x1*(x1^2+x2^2-1)", 2).eval({Rational(1, 2), Rational(1, 2)}) ==
        Rational(-1, 4));
}

TEST_CASE("degree with zero sentinel") {
  CHECK(parse_poly("x1", 1).degree() == 1);
  CHECK(!SparsePoly(2).degree().has_value());
  CHECK(parse_poly("x1^2*x2^3+x1^5", 2).degree() == 5);
  CHECK(parse_poly("x1-x1", 1) == SparsePoly(1));
}

TEST_CASE("ring axioms at random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    SparsePoly a = random_poly(rng, 2, 4, 4);
    SparsePoly b = random_poly(rng, 2, 4, 4);
    SparsePoly c = random_poly(rng, 2, 4, 4);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a + b == b + a);
    auto x = random_point(rng, 2);
    CHECK((a * b).eval(x) == a.eval(x) * b.eval(x));
    CHECK((a + b).eval(x) == a.eval(x) + b.eval(x));
  }
}

TEST_CASE("derivative and embedding") {
  SparsePoly p = parse_poly("x1^3+3*x1*x2", 2);
  CHECK(p.derivative(0) == parse_poly("3*x1^2+3*x2", 2));
  CHECK(p.derivative(1) == parse_poly("3*x1", 2));
  SparsePoly e = p.embed(4, 1);
  CHECK(e == parse_poly("x2^3+3*x2*x3", 4));
}

TEST_CASE("substitute_last fixes a family parameter") {
  SparsePoly fam = parse_poly("x1^2+x2^2-x3", 3);
  CHECK(fam.substitute_last(Rational(1)) == parse_poly("x1^2+x2^2-1", 2));
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_AS(parse_poly("x1+", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_poly("x0", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_poly("x2", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_poly("(x1", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_poly("x1^-1", 1), std::invalid_argument);
}

TEST_CASE("decimal literals are exact") {
  SparsePoly p = parse_poly("x1-0.005", 1);
  CHECK(p.eval({Rational(1, 200)}) == 0);
}

TEST_CASE("to_string round-trips through the parser") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    SparsePoly p = random_poly(rng, 3, 5, 3);
    CHECK(parse_poly(p.to_string(), 3) == p);
  }
}
