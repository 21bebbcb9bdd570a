#include "doctest.h"

#include <cmath>

#include "delaycert/stability.hpp"

namespace st = delaycert::stability;
using delaycert::SystemKind;
using delaycert::SystemSpec;
using namespace delaycert::poly;

namespace {

SystemSpec example1(double tau) { return delaycert::linear_single({{0, 1}, {-2, 0.1}}, {{0, 0}, {1, 0}}, tau); }

SystemSpec scalar_nl(const RPoly& f, std::vector<RPoly> region = {}) {
    SystemSpec s;
    s.kind = SystemKind::NonlinearDelay;
    s.n = 1;
    s.delays = {1.0};
    s.f = {f};
    s.state_region = std::move(region);
    s.validate();
    return s;
}

const RPoly X = RPoly::variable(delaycert::state_var(0, 0));
const RPoly XD = RPoly::variable(delaycert::state_var(1, 0));

}  // namespace

TEST_CASE("example 1: stable delay certifies, delay past the analytic margin does not") {
    auto ok = st::solve(st::build_single_delay(example1(1.0), 2));
    CHECK(ok.verdict == st::Verdict::Certified);
    CHECK(ok.margin > 1e-3);
    CHECK(ok.gram_residual <= 1e-7);
    auto bad = st::solve(st::build_single_delay(example1(1.8), 4));
    CHECK(bad.verdict == st::Verdict::NotCertified);
}

TEST_CASE("example 1 is not certified near zero delay") {
    // The delay-free system is unstable; stability starts near 0.1.
    CHECK(st::solve(st::build_single_delay(example1(0.05), 2)).verdict == st::Verdict::NotCertified);
}

TEST_CASE("build dispatches on the system kind") {
    CHECK(st::build(example1(1.0), 2).builder == "single-delay");
    auto m = delaycert::linear_multiple({{{-2}}, {{0.5}}, {{0.5}}}, {0.5, 1.0});
    CHECK(st::build(m, 2).builder == "multiple-delay");
    CHECK(st::build(scalar_nl(RPoly(Rational(-1)) * X * X * X + RPoly(frac(9, 10)) * XD * XD * XD), 2).builder ==
          "nonlinear-single");
}

TEST_CASE("multiple-delay builder with both delays equal in ratio to a single delay") {
    // x' = -2x + 0.5x(t-0.5) + 0.5x(t-1) is delay-independently stable.
    auto m = delaycert::linear_multiple({{{-2}}, {{0.5}}, {{0.5}}}, {0.5, 1.0});
    auto o = st::solve(st::build_multiple_delay(m, 2));
    CHECK(o.verdict == st::Verdict::Certified);
}

TEST_CASE("distributed delay: kernel inside and outside the stability range") {
    auto dist = [](double c) {
        SystemSpec s;
        s.kind = SystemKind::LinearDistributed;
        s.n = 1;
        s.delays = {1.0};
        s.A = {constant_matrix({{-1}})};
        s.kernel = constant_matrix({{c}});
        s.validate();
        return s;
    };
    CHECK(st::solve(st::build_distributed_delay(dist(0.5), 2)).verdict == st::Verdict::Certified);
    CHECK(st::solve(st::build_distributed_delay(dist(1.5), 2)).verdict == st::Verdict::NotCertified);
}

TEST_CASE("nonlinear single delay: cubic system") {
    auto ok = st::solve(st::build_nonlinear_single(scalar_nl(RPoly(Rational(-1)) * X * X * X + RPoly(frac(9, 10)) * XD * XD * XD), 4));
    CHECK(ok.verdict == st::Verdict::Certified);
    auto bad = st::solve(st::build_nonlinear_single(scalar_nl(RPoly(Rational(-1)) * X * X * X + RPoly(frac(11, 10)) * XD * XD * XD), 4));
    CHECK(bad.verdict != st::Verdict::Certified);
}

TEST_CASE("weight power follows the lowest state degree") {
    auto b = st::build_nonlinear_single(scalar_nl(RPoly(Rational(-1)) * X * X * X + RPoly(frac(9, 10)) * XD * XD * XD), 4);
    CHECK(b.weight_power == 2);
    SystemSpec ode;
    ode.kind = SystemKind::Ode;
    ode.n = 1;
    ode.f = {RPoly(Rational(-1)) * X};
    ode.validate();
    CHECK(st::build_ode(ode, 2).weight_power == 1);
}

TEST_CASE("ODE: cubic decay certifies, cubic growth does not") {
    SystemSpec ode;
    ode.kind = SystemKind::Ode;
    ode.n = 1;
    ode.f = {RPoly(Rational(-1)) * X * X * X};
    ode.validate();
    CHECK(st::solve(st::build_ode(ode, 4)).verdict == st::Verdict::Certified);
    ode.f = {X * X * X};
    CHECK(st::solve(st::build_ode(ode, 4)).verdict == st::Verdict::NotCertified);
}

TEST_CASE("delay-independent builder: Cooke model") {
    auto cooke = [&](int a, int b) {
        return scalar_nl(RPoly(Rational(-a)) * X + RPoly(Rational(b)) * XD * (RPoly(Rational(1)) - X),
                         {X * (RPoly(Rational(1)) - X)});
    };
    CHECK(st::solve(st::build_delay_independent(cooke(2, 1), 4)).verdict == st::Verdict::Certified);
    CHECK(st::solve(st::build_delay_independent(cooke(1, 2), 4)).verdict == st::Verdict::NotCertified);
}

TEST_CASE("certificate extraction converts to seconds") {
    // Same system at tau = 1 and tau = 2 after time scaling: A -> A/2, tau -> 2.
    auto s1 = example1(1.0);
    auto b = st::build_single_delay(s1, 2);
    auto o = st::solve(b);
    REQUIRE(o.verdict == st::Verdict::Certified);
    auto c = st::extract_certificate(b, o);
    CHECK(c.builder == "single-delay");
    CHECK(c.delays == std::vector<double>{1.0});
    CHECK(c.P.rows() == 2);
    CHECK((c.P - c.P.transpose()).norm() < 1e-12);
    CHECK(c.P.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > 0);
    CHECK(c.Q.size() == 1);
    CHECK(c.R.size() == 1);
    CHECK(c.spec_hash == st::spec_hash(s1));
}

TEST_CASE("certificate JSON round trip") {
    auto b = st::build_single_delay(example1(1.0), 2);
    auto o = st::solve(b);
    REQUIRE(o.verdict == st::Verdict::Certified);
    auto c = st::extract_certificate(b, o);
    auto text = st::certificate_to_json(c);
    auto back = st::certificate_from_json(text);
    CHECK(back.margin == c.margin);
    CHECK(back.P == c.P);
    CHECK(back.grams.size() == c.grams.size());
    CHECK(st::certificate_to_json(back) == text);
    CHECK_THROWS_AS(st::certificate_from_json("{\"format\": \"other\"}"), std::invalid_argument);
}

TEST_CASE("spec hash depends on content only") {
    CHECK(st::spec_hash(example1(1.0)) == st::spec_hash(example1(1.0)));
    CHECK(st::spec_hash(example1(1.0)) != st::spec_hash(example1(1.1)));
}

TEST_CASE("verify_certificate accepts a solved certificate and rejects the wrong system") {
    auto spec = example1(1.0);
    auto b = st::build_single_delay(spec, 2);
    auto o = st::solve(b);
    REQUIRE(o.verdict == st::Verdict::Certified);
    auto c = st::extract_certificate(b, o);
    st::VerifyOptions vo;
    vo.trials = 8;
    auto rep = st::verify_certificate(c, spec, vo);
    CHECK_MESSAGE(rep.passed, rep.message);
    CHECK(rep.trials == 8);
    CHECK_THROWS(st::verify_certificate(c, delaycert::linear_single({{-1}}, {{0}}, 1.0), vo));
}

TEST_CASE("parameter-dependent builder covers a delay box") {
    auto s = example1(1.0);
    s.params = {{"tau", 0.3, 1.0}};
    s.tau_param = "tau";
    s.validate();
    auto o = st::solve(st::build_single_delay_pd(s, 2, 2));
    CHECK(o.verdict == st::Verdict::Certified);
}
