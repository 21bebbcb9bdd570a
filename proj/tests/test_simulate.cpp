#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "delaycert/quadrature.hpp"
#include "delaycert/simulate.hpp"

namespace st = delaycert::stability;
namespace sim = delaycert::simulate;
using delaycert::SystemKind;
using delaycert::SystemSpec;
using namespace delaycert::poly;

namespace {

const int TH = var("theta"), OM = var("omega");

SystemSpec scalar_delay() { return delaycert::linear_single({{0}}, {{-1}}, 1.0); }

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("method of steps matches the closed form on the first interval") {
    // x' = -x(t-1), phi = 1: x(t) = 1 - t on [0,1], 1 - t + (t-1)^2/2 on [1,2].
    auto tr = sim::integrate(scalar_delay(), sim::constant_history(vec1(1.0)), 2.0, 0.01);
    CHECK(tr.at(0.5)(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tr.at(1.5)(0) == doctest::Approx(1 - 1.5 + 0.125).epsilon(1e-10));
    CHECK(tr.at(-0.3)(0) == 1.0);
}

TEST_CASE("RK4 is fourth order on x' = -x(t-1)") {
    auto phi = sim::polynomial_history({DPoly::term(Monomial(), 1.0) + DPoly::term(Monomial::of(TH), 0.5)});
    auto ref = sim::integrate(scalar_delay(), phi, 4.0, 1.0 / 1600).x.back()(0);
    double prev = 0;
    for (int k = 0; k < 3; ++k) {
        const double h = 0.1 / (1 << k);
        const double err = std::abs(sim::integrate(scalar_delay(), phi, 4.0, h).x.back()(0) - ref);
        if (k > 0) {
            const double ratio = prev / err;
            CHECK(ratio > 12.0);
            CHECK(ratio < 20.0);
        }
        prev = err;
    }
}

TEST_CASE("ODE integration and blow-up detection") {
    SystemSpec ode;
    ode.kind = SystemKind::Ode;
    ode.n = 1;
    ode.f = {RPoly::variable(delaycert::state_var(0, 0)) * RPoly(Rational(-1))};
    ode.validate();
    auto tr = sim::integrate(ode, sim::constant_history(vec1(1.0)), 1.0, 0.01);
    CHECK(tr.x.back()(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    const RPoly x = RPoly::variable(delaycert::state_var(0, 0));
    ode.f = {x * x};
    auto blow = sim::integrate(ode, sim::constant_history(vec1(1.0)), 5.0, 0.001);
    CHECK(blow.blow_up);
    CHECK(blow.escape_time == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("error estimate tracks the step-doubling difference") {
    sim::IntegrateOptions o;
    o.error_estimate = true;
    auto tr = sim::integrate(scalar_delay(), sim::constant_history(vec1(1.0)), 3.0, 0.05, o);
    CHECK(std::isfinite(tr.error_estimate));
    CHECK(tr.error_estimate < 1e-5);
}

TEST_CASE("CSV output has a header and one row per step") {
    auto tr = sim::integrate(scalar_delay(), sim::constant_history(vec1(1.0)), 1.0, 0.25);
    std::ostringstream os;
    tr.write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind("t,x1\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 1 + static_cast<long>(tr.t.size()));
}

TEST_CASE("history validation") {
    CHECK_THROWS(sim::integrate(scalar_delay(), sim::constant_history(vec1(1.0)), 1.0, 2.0));
    CHECK_THROWS(sim::integrate(scalar_delay(), sim::constant_history(Eigen::VectorXd::Zero(2)), 1.0, 0.1));
}

TEST_CASE("functional_value is exact on polynomial segments") {
    // Hand-built certificate on [-2, 0] with polynomial Q, S, R and a cubic segment.
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    auto rp = [&](std::vector<int> vars, int d) {
        DPoly p;
        if (vars.size() == 1) {
            for (int a = 0; a <= d; ++a) p.add(a ? Monomial::of(vars[0], a) : Monomial(), g(rng));
        } else {
            for (int a = 0; a <= d; ++a)
                for (int b = 0; a + b <= d; ++b) {
                    Monomial m = Monomial::from_terms({});
                    std::vector<std::pair<int, int>> f;
                    if (a) f.emplace_back(vars[0], a);
                    if (b) f.emplace_back(vars[1], b);
                    std::sort(f.begin(), f.end());
                    p.add(Monomial::from_terms(f), g(rng));
                }
        }
        return p;
    };
    st::Certificate c;
    c.kind = SystemKind::LinearSingle;
    c.builder = "single-delay";
    c.n = 1;
    c.delays = {2.0};
    c.P = Eigen::MatrixXd::Constant(1, 1, 1.5);
    DMatrix Q(1, 1), S(1, 1), R(1, 1);
    Q(0, 0) = rp({TH}, 3);
    S(0, 0) = rp({TH}, 2);
    R(0, 0) = rp({TH, OM}, 3);
    c.Q = {Q};
    c.S = {S};
    c.R = {{R}};
    DPoly x = rp({TH}, 3);
    sim::Segment seg;
    seg.length = 2.0;
    seg.at = [&](double t) { return vec1(evaluate(x, {{TH, t}})); };
    const double v = sim::functional_value(c, seg);

    // Symbolic reference.
    const Rational lo(-2), hi(0);
    const RPoly xr = to_rational(x), x0 = substitute(xr, TH, Rational(0));
    RPoly single = RPoly(Rational(2)) * x0 * to_rational(Q(0, 0)) * xr + to_rational(S(0, 0)) * xr * xr;
    Rational ref = Rational(3, 2) * x0.coefficient(Monomial()) * x0.coefficient(Monomial());
    ref += definite_integral(single, TH, lo, hi).coefficient(Monomial());
    RPoly dbl = xr * to_rational(R(0, 0)) * rename(xr, TH, OM);
    ref += definite_integral(definite_integral(dbl, TH, lo, hi), OM, lo, hi).coefficient(Monomial());
    CHECK(std::abs(v - ref.get_d()) <= 1e-10 * (1 + std::abs(ref.get_d())));
}

TEST_CASE("decrease check on a solved certificate") {
    auto spec = delaycert::linear_single({{0, 1}, {-2, 0.1}}, {{0, 0}, {1, 0}}, 1.0);
    auto b = st::build_single_delay(spec, 2);
    auto o = st::solve(b);
    REQUIRE(o.verdict == st::Verdict::Certified);
    auto cert = st::extract_certificate(b, o);
    Eigen::VectorXd x0(2);
    x0 << 1, -0.5;
    auto tr = sim::integrate(spec, sim::constant_history(x0), 20.0, sim::default_step(spec));
    auto rep = sim::decrease_check(cert, tr, 1e-6);
    CHECK(rep.samples > 50);
    CHECK(rep.passed);
    CHECK(rep.violations == 0);

    // Flipping the certificate's sign breaks monotone decrease.
    auto flipped = cert;
    flipped.P = -cert.P;
    for (auto& q : flipped.Q) q = q.map([](const DPoly& p) { return p.scaled(-1.0); });
    for (auto& s : flipped.S) s = s.map([](const DPoly& p) { return p.scaled(-1.0); });
    for (auto& row : flipped.R)
        for (auto& r : row) r = r.map([](const DPoly& p) { return p.scaled(-1.0); });
    CHECK_FALSE(sim::decrease_check(flipped, tr, 1e-6).passed);
}

TEST_CASE("default step") {
    CHECK(sim::default_step(scalar_delay()) == doctest::Approx(0.02));
    auto m = delaycert::linear_multiple({{{-2}}, {{0.5}}, {{0.5}}}, {0.5, 1.0});
    CHECK(sim::default_step(m) == doctest::Approx(0.01));
}

TEST_CASE("simulate: the two-delay system as printed with weights 1/20, 19/20 still decays at tau = 1.4") {
    // Documents why the multiple-delay example uses a different system: this one is
    // stable on both sides of the published interval (0.20247, 1.3722).
    auto printed = [](double tau) {
        return delaycert::linear_multiple({{{-2, 0}, {0, -0.9}}, {{-0.05, 0}, {-0.05, -0.05}}, {{-0.95, 0}, {-0.95, -0.95}}},
                                          {tau / 2, tau});
    };
    for (double tau : {0.1, 1.4}) {  // below the published lower limit and above the upper one
        const auto traj = sim::integrate(printed(tau), sim::constant_history(Eigen::Vector2d(1, -1)), 60.0, tau / 100);
        INFO("tau " << tau);
        CHECK(traj.at(60.0).cwiseAbs().maxCoeff() < 1e-3);
    }
}
