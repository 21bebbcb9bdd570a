#include "doctest.h"

#include <random>

#include "delaycert/sos.hpp"


namespace sdp = delaycert::sdp;
namespace sos = delaycert::sos;
using namespace delaycert::poly;
using sos::Program;
using sos::matrix_sos;
using sos::interval_positivity;
using sos::putinar;
using sos::check_decomposition;
using sos::gram_residual;

namespace {

LPoly lift(const RPoly& p) {
    return p.map([](const Rational& c) { return LinExpr(c); });
}
LMatrix lift(const RMatrix& m) {
    return m.map([](const RPoly& p) { return lift(p); });
}
LMatrix scalar(const RPoly& p) {
    LMatrix m(1, 1);
    m(0, 0) = lift(p);
    return m;
}
RMatrix mat2(const RPoly& a, const RPoly& b, const RPoly& c) {
    RMatrix m(2, 2);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = b;
    m(1, 1) = c;
    return m;
}

const int X = var("x"), Y = var("y"), T = var("theta");
RPoly px() { return RPoly::variable(X); }
RPoly py() { return RPoly::variable(Y); }
RPoly pt() { return RPoly::variable(T); }

bool feasible(const Program& prog) { return sdp::solve(prog.sdp).status == sdp::Status::Feasible; }

double min_eig2(const DMatrix& m, const std::map<int, double>& pt) {
    Eigen::MatrixXd v(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) v(static_cast<int>(i), static_cast<int>(j)) = evaluate(m(i, j), pt);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// Solve, then sample the reconstructed representation (not the target) on the domain.
void check_sound(Program& prog, const std::vector<int>& vars, double lo, double hi) {
    auto sol = sdp::solve(prog.sdp);
    REQUIRE(sol.status == sdp::Status::Feasible);
    CHECK(gram_residual(prog, sol) <= 1e-7);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(lo, hi);
    auto vals = sol.values(prog.sdp);
    for (const auto& c : prog.constraints) {
        DMatrix t = c.target.map([&](const LPoly& p) { return assign(p, vals); });
        double worst = 1e300;
        for (int k = 0; k < 200; ++k) {
            std::map<int, double> point;
            for (int v : vars) point[v] = u(rng);
            worst = std::min(worst, min_eig2(t, point));
        }
        CHECK(worst >= -1e-6);
    }
}

}  // namespace

TEST_CASE("sos: x^2 feasible, -x^2 infeasible") {
    Program a;
    sos::sos(a, lift(px() * px()));
    auto sol = sdp::solve(a.sdp);
    REQUIRE(sol.status == sdp::Status::Feasible);
    const auto& Q = sol.blocks[0];
    CHECK(Q(0, 0) == doctest::Approx(0).epsilon(1e-6));
    CHECK(Q(1, 1) == doctest::Approx(1).epsilon(1e-7));

    Program b;
    sos::sos(b, lift(-(px() * px())));
    CHECK(sdp::solve(b.sdp).status == sdp::Status::Infeasible);
}

TEST_CASE("sos: odd degree rejected") {
    Program p;
    CHECK_THROWS(sos::sos(p, lift(px() * px() * px())));
}

TEST_CASE("sos: Motzkin polynomial is not SOS") {
    RPoly x2 = px() * px(), y2 = py() * py();
    RPoly m = x2 * x2 * y2 + x2 * y2 * y2 - (x2 * y2).scaled(Rational(3)) + RPoly(Rational(1));
    // Nonnegative on samples (AM-GM), yet no Gram matrix exists.
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 200; ++k) CHECK(evaluate(m, {{X, u(rng)}, {Y, u(rng)}}) >= -1e-12);
    for (int d : {3, 4}) {
        Program p;
        sos::sos(p, lift(m), d);
        CHECK(sdp::solve(p.sdp).status != sdp::Status::Feasible);
    }
}

TEST_CASE("matrix sos: identity and a rank-one outer product") {
    Program a;
    matrix_sos(a, LMatrix::identity(2));
    CHECK(feasible(a));

    Program b;
    matrix_sos(b, lift(mat2(RPoly(Rational(1)), px(), px() * px())));
    auto sol = sdp::solve(b.sdp);
    REQUIRE(sol.status == sdp::Status::Feasible);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.blocks[0]);
    auto ev = es.eigenvalues();
    // Gram over [1,x] ⊗ I₂ is 4×4; only one direction can carry mass.
    CHECK(ev(ev.size() - 1) > 0.5);
    CHECK(ev(ev.size() - 2) < 1e-5);

    Program c;
    RMatrix asym(2, 2);
    asym(0, 1) = px();
    CHECK_THROWS(matrix_sos(c, lift(asym)));
}

TEST_CASE("interval positivity on [-1,0]") {
    RPoly base = pt() * (pt() + RPoly(Rational(1)));
    Program bad;
    interval_positivity(bad, scalar(base + RPoly(frac(1, 5))), T, RPoly(Rational(-1)), RPoly(Rational(0)));
    CHECK(sdp::solve(bad.sdp).status == sdp::Status::Infeasible);

    Program good;
    interval_positivity(good, scalar(base + RPoly(frac(1, 3))), T, RPoly(Rational(-1)), RPoly(Rational(0)));
    check_sound(good, {T}, -1, 0);

    Program self;
    auto c = interval_positivity(self, scalar(-base), T, RPoly(Rational(-1)), RPoly(Rational(0)));
    auto sol = sdp::solve(self.sdp);
    REQUIRE(sol.status == sdp::Status::Feasible);
    REQUIRE(c.multipliers.size() == 1);
    CHECK(sol.blocks[static_cast<std::size_t>(c.multipliers[0].handle.block)](0, 0) ==
          doctest::Approx(1).epsilon(1e-7));
    CHECK(sol.blocks[static_cast<std::size_t>(c.gram.handle.block)].norm() < 1e-6);
}

TEST_CASE("univariate matrix positivity on an interval") {
    // [[θ+1, 0],[0, -θ]] is PSD on [-1,0] but not globally.
    RMatrix m = mat2(pt() + RPoly(Rational(1)), RPoly(), -pt());
    Program p;
    interval_positivity(p, lift(m), T, RPoly(Rational(-1)), RPoly(Rational(0)));
    check_sound(p, {T}, -1, 0);
    Program q;
    interval_positivity(q, lift(m), T, RPoly(Rational(-1)), RPoly(Rational(1)));
    CHECK(sdp::solve(q.sdp).status == sdp::Status::Infeasible);
}

TEST_CASE("putinar region constraints") {
    Program a;
    auto c = putinar(a, scalar(py()), {py()}, 0);
    auto sol = sdp::solve(a.sdp);
    REQUIRE(sol.status == sdp::Status::Feasible);
    CHECK(sol.blocks[static_cast<std::size_t>(c.multipliers[0].handle.block)](0, 0) ==
          doctest::Approx(1).epsilon(1e-7));

    RPoly g = RPoly(Rational(1)) - py() * py();
    Program b;
    putinar(b, scalar(g), {g}, 0);
    CHECK(feasible(b));

    for (int d : {0, 2}) {
        Program n;
        putinar(n, scalar(py()), {g}, d);
        CHECK(sdp::solve(n.sdp).status == sdp::Status::Infeasible);
    }
}

TEST_CASE("check_decomposition") {
    MonomialBasis z = monomial_basis({X}, 2);
    DPoly p = to_double(px() * px() * px() * px() + RPoly(Rational(1)));
    Eigen::MatrixXd G = Eigen::Vector3d(1, 0, 1).asDiagonal();
    auto r = check_decomposition(p, G, z);
    CHECK(r.residual == 0.0);
    CHECK(r.min_eig >= 0.0);

    Eigen::MatrixXd Gp = G;
    Gp(1, 1) += 1e-3;
    CHECK(check_decomposition(p, Gp, z).residual == doctest::Approx(1e-3).epsilon(1e-9));

    auto e = check_decomposition(DPoly(), Eigen::MatrixXd(), MonomialBasis{});
    CHECK(e.residual == 0.0);
}

TEST_CASE("property: Gram reconstruction and sampling soundness") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> coef(-3, 3);
    int solved = 0;
    for (int trial = 0; trial < 6; ++trial) {
        // Random SOS: sum of squares of two random quadratics plus a margin.
        RPoly s;
        for (int k = 0; k < 2; ++k) {
            RPoly q = RPoly(Rational(coef(rng))) + px().scaled(Rational(coef(rng))) +
                      (py() * px()).scaled(Rational(coef(rng))) + (py() * py()).scaled(Rational(coef(rng)));
            s += q * q;
        }
        s += RPoly(frac(1, 10));
        Program p;
        sos::sos(p, lift(s));
        check_sound(p, {X, Y}, -3, 3);
        ++solved;
    }
    CHECK(solved == 6);
}

TEST_CASE("property: feasibility is monotone in the basis degree") {
    std::vector<RPoly> targets = {
        px() * px() + RPoly(Rational(1)),
        (px() * px() - RPoly(Rational(1))) * (px() * px() - RPoly(Rational(1))),
        px() * px() * py() * py() + py() * py() + RPoly(frac(1, 2)),
    };
    for (const auto& t : targets) {
        int d = (t.degree() + 1) / 2;
        for (int k : {d, d + 1}) {
            Program p;
            sos::sos(p, lift(t), k);
            CHECK(feasible(p));
        }
    }
}

TEST_CASE("property: matrix sos agrees with its scalarization") {
    const int U = var("u"), V = var("v");
    RPoly u = RPoly::variable(U), v = RPoly::variable(V);
    std::vector<std::pair<RMatrix, bool>> cases = {
        {mat2(px() * px() + RPoly(Rational(1)), px(), RPoly(Rational(1))), true},
        {mat2(px() * px() + RPoly(Rational(1)), px().scaled(Rational(2)), RPoly(Rational(1))), false},
        {mat2(px() * px() + RPoly(Rational(1)), px(), px() * px() + RPoly(Rational(1))), true},
    };
    for (const auto& [m, expect] : cases) {
        Program a;
        matrix_sos(a, lift(m));
        bool fa = feasible(a);
        RPoly sc = u * u * m(0, 0) + (u * v * m(0, 1)).scaled(Rational(2)) + v * v * m(1, 1);
        Program b;
        sos::sos(b, lift(sc));
        bool fb = feasible(b);
        CHECK(fa == expect);
        CHECK(fa == fb);
    }
}
