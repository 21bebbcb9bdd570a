#include "doctest.h"

#include <random>

#include "delaycert/polynomial.hpp"

using namespace delaycert::poly;

namespace {
const int TH = var("theta");
const int X = var("x");
const int Y = var("y");
const int Z = var("z");

RPoly th() { return RPoly::variable(TH); }
RPoly c(long n, long d = 1) { return RPoly(Rational(n, d)); }

RPoly random_univariate(std::mt19937& rng, int v, int maxdeg) {
    std::uniform_int_distribution<int> coef(-9, 9), deg(0, maxdeg);
    RPoly p;
    int d = deg(rng);
    for (int k = 0; k <= d; ++k) p.add(Monomial::of(v, k), frac(coef(rng), 1 + std::abs(coef(rng))));
    return p;
}

RPoly random_poly(std::mt19937& rng, const std::vector<int>& vars, int maxdeg) {
    std::uniform_int_distribution<int> coef(-9, 9);
    RPoly p;
    for (const auto& m : monomial_basis(vars, maxdeg).monomials)
        if (rng() % 2) p.add(m, frac(coef(rng), 1 + std::abs(coef(rng))));
    return p;
}
}  // namespace

TEST_CASE("monomial_basis lists graded monomials") {
    auto b = monomial_basis({TH}, 4);
    REQUIRE(b.size() == 5);
    for (int k = 0; k <= 4; ++k) CHECK(b.monomials[static_cast<std::size_t>(k)] == Monomial::of(TH, k));

    CHECK(monomial_basis({X}, 0).size() == 1);
    CHECK(monomial_basis({X}, 0).monomials[0].is_constant());

    auto b3 = monomial_basis({X, Y, Z}, 2);
    CHECK(b3.size() == 10);
    for (std::size_t i = 1; i < b3.size(); ++i) CHECK(b3.monomials[i - 1].degree() <= b3.monomials[i].degree());
}

TEST_CASE("basis length is binomial(v+d, d)") {
    auto binom = [](int n, int k) {
        long r = 1;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    std::vector<int> vars = {X, Y, Z, TH};
    for (int v = 1; v <= 4; ++v)
        for (int d = 0; d <= 6; ++d) {
            std::vector<int> vs(vars.begin(), vars.begin() + v);
            CHECK(static_cast<long>(monomial_basis(vs, d).size()) == binom(v + d, d));
        }
}

TEST_CASE("arithmetic") {
    CHECK((th() + c(1)) * (th() - c(1)) == th() * th() - c(1));
    auto p = th() * th() + c(3);
    CHECK(p + RPoly() == p);
    auto x2 = RPoly::term(Monomial::of(X, 2), 1);
    auto x3 = RPoly::term(Monomial::of(X, 3), 1);
    auto x5 = x2 * x3;
    CHECK(x5.degree() == 5);
    CHECK(x5 == RPoly::term(Monomial::of(X, 5), 1));
    CHECK((th() - th()).is_zero());
    CHECK((th() - th()).terms().empty());
}

TEST_CASE("differentiate") {
    auto t3 = RPoly::term(Monomial::of(TH, 3), 1);
    CHECK(differentiate(t3, TH) == RPoly::term(Monomial::of(TH, 2), 3));
    CHECK(differentiate(c(7), TH).is_zero());
    const int W = var("omega");
    auto p = RPoly::term(Monomial::from_terms({{TH, 2}, {W, 1}}), 1);
    CHECK(differentiate(p, TH) == RPoly::term(Monomial::from_terms({{TH, 1}, {W, 1}}), 2));
}

TEST_CASE("definite_integral") {
    CHECK(definite_integral(th(), TH, Rational(-1), Rational(0)) == c(-1, 2));
    CHECK(definite_integral(c(1), TH, Rational(-1), Rational(0)) == c(1));
    // Moments of [1, θ, ..., θ⁴] over [-1, 0].
    std::vector<Rational> expect = {Rational(1), Rational(-1, 2), Rational(1, 3), Rational(-1, 4), Rational(1, 5)};
    auto b = monomial_basis({TH}, 4);
    for (std::size_t k = 0; k < 5; ++k) {
        auto m = definite_integral(RPoly::term(b.monomials[k], 1), TH, Rational(-1), Rational(0));
        CHECK(m == RPoly(expect[k]));
    }
}

TEST_CASE("definite_integral with a parametric bound") {
    const int T = var("tau");
    auto tau = RPoly::variable(T);
    auto r = definite_integral(th(), TH, -tau, RPoly());
    CHECK(r == RPoly::term(Monomial::of(T, 2), Rational(-1, 2)));
}

TEST_CASE("evaluate") {
    auto p = th() * th() + c(1);
    CHECK(evaluate(p, {{TH, -2.0}}) == 5.0);
    auto b = monomial_basis({TH}, 4);
    auto z0 = evaluate_basis(b, {{TH, 0.0}});
    CHECK(z0 == std::vector<double>{1, 0, 0, 0, 0});
    auto zt = evaluate_basis(b, {{TH, -1.0}});
    CHECK(zt == std::vector<double>{1, -1, 1, -1, 1});
    CHECK(evaluate_exact(p, {{TH, Rational(-2)}}) == 5);
    CHECK_THROWS(evaluate(p, {}));
}

TEST_CASE("affine_substitute") {
    auto t2 = th() * th();
    auto r = affine_substitute(t2, TH, Rational(2), Rational(1));
    CHECK(r == RPoly::term(Monomial::of(TH, 2), 4) + RPoly::term(Monomial::of(TH, 1), 4) + c(1));
    CHECK(affine_substitute(t2, TH, Rational(1), Rational(0)) == t2);

    // Piece map for [-tau_i, -tau_{i-1}] -> [-tau_K, 0].
    Rational tauK(3, 2), tau_prev(1, 2), tau_i(1);
    Rational delta = tau_i - tau_prev;
    auto map = affine_substitute(th(), TH, tauK / delta, tau_prev * tauK / delta);
    CHECK(evaluate_exact(map, {{TH, -tau_i}}) == -tauK);
    CHECK(evaluate_exact(map, {{TH, -tau_prev}}) == 0);
}

TEST_CASE("property: fundamental theorem on random univariate polynomials") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = random_univariate(rng, TH, 7);
        Rational a = frac(static_cast<long>(rng() % 7) - 3, 1 + static_cast<long>(rng() % 4));
        Rational b = a + frac(1 + static_cast<long>(rng() % 5), 2);
        auto lhs = definite_integral(differentiate(p, TH), TH, a, b);
        auto rhs = RPoly(evaluate_exact(p, {{TH, b}}) - evaluate_exact(p, {{TH, a}}));
        CHECK(lhs == rhs);

        auto pd = to_double(p);
        auto lhs_d = definite_integral(differentiate(pd, TH), TH, a, b);
        double rhs_d = evaluate(pd, {{TH, b.get_d()}}) - evaluate(pd, {{TH, a.get_d()}});
        double got = lhs_d.is_zero() ? 0.0 : lhs_d.terms().begin()->second;
        CHECK(std::abs(got - rhs_d) < 1e-12 * (1 + std::abs(rhs_d)));
    }
}

TEST_CASE("property: piece map composed with its inverse is the identity") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = random_poly(rng, {TH, X}, 5);
        Rational alpha = frac(1 + static_cast<long>(rng() % 9), 1 + static_cast<long>(rng() % 5));
        Rational beta = frac(static_cast<long>(rng() % 9) - 4, 1 + static_cast<long>(rng() % 3));
        auto fwd = affine_substitute(p, TH, alpha, beta);
        auto back = affine_substitute(fwd, TH, 1 / alpha, -beta / alpha);
        CHECK(back == p);
    }
}

TEST_CASE("property: arithmetic is commutative and associative") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = random_poly(rng, {X, Y}, 3);
        auto b = random_poly(rng, {Y, TH}, 3);
        auto cc = random_poly(rng, {X, TH}, 2);
        CHECK(a + b == b + a);
        CHECK(a * b == b * a);
        CHECK((a + b) + cc == a + (b + cc));
        CHECK((a * b) * cc == a * (b * cc));
        CHECK(a * (b + cc) == a * b + a * cc);
        if (!a.is_zero() && !b.is_zero()) CHECK((a * b).degree() == a.degree() + b.degree());
        auto mixed = a * b - b * a + a;
        for (const auto& [m, k] : mixed.terms()) CHECK(sgn(k) != 0);
    }
}

TEST_CASE("affine coefficients") {
    auto q = LPoly::term(Monomial::of(TH), LinExpr::unknown(3, 2));
    auto p = q * RPoly(Rational(1, 2)) + LPoly(LinExpr(Rational(1)));
    CHECK(p.coefficient(Monomial::of(TH)) == LinExpr::unknown(3, 1));
    auto d = assign(p, {0, 0, 0, 4.0});
    CHECK(evaluate(d, {{TH, 2.0}}) == 9.0);
    CHECK((q - q).is_zero());
}

TEST_CASE("poly matrix") {
    auto m = constant_matrix({{1, 2}, {2, 1}});
    CHECK(m.is_symmetric());
    auto prod = m * m;
    CHECK(prod(0, 0) == c(5));
    CHECK(prod(0, 1) == c(4));
    CHECK(to_rational(0.1) == Rational(3602879701896397, 36028797018963968));
}

TEST_CASE("parse_polynomial") {
    const int X1 = var("x1"), A = var("a");
    RPoly x = RPoly::variable(X1), a = RPoly::variable(A);
    CHECK(parse_polynomial("x1") == x);
    CHECK(parse_polynomial(" -x1^3 + 0.9*x1 ") == RPoly(Rational(-1)) * x * x * x + RPoly(frac(9, 10)) * x);
    CHECK(parse_polynomial("2.5e-1*a*(x1 - 1)") == RPoly(frac(1, 4)) * a * (x - RPoly(Rational(1))));
    CHECK(parse_polynomial("x1/4 - -x1") == RPoly(frac(5, 4)) * x);
    CHECK(parse_polynomial("(a+x1)^2") == a * a + RPoly(Rational(2)) * a * x + x * x);
    CHECK(parse_polynomial("0.1").coefficient(Monomial()) == frac(1, 10));
    CHECK(parse_polynomial("09").coefficient(Monomial()) == Rational(9));
    CHECK_THROWS_AS(parse_polynomial("x1 +"), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("x1 / x1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("x1^-1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("(x1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("x1 $"), std::invalid_argument);
}
