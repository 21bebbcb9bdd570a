#include "doctest.h"

#include <random>

#include "delaycert/search.hpp"
#include "json.hpp"

namespace st = delaycert::stability;
namespace search = delaycert::search;
using delaycert::SystemSpec;

namespace {

SystemSpec example1(double tau) { return delaycert::linear_single({{0, 1}, {-2, 0.1}}, {{0, 0}, {1, 0}}, tau); }

search::SearchOptions quick(int d) {
    search::SearchOptions o;
    o.degree = d;
    o.verify_options.trials = 6;
    return o;
}

}  // namespace

TEST_CASE("grid endpoints are inclusive") {
    auto g = search::grid(0.2, 0.2, 1.6);
    REQUIRE(g.size() == 8);
    CHECK(g.front() == 0.2);
    CHECK(g.back() == doctest::Approx(1.6));
    CHECK(search::grid(1.0, 0.5, 1.0).size() == 1);
    CHECK_THROWS(search::grid(1.0, 0.0, 2.0));
    CHECK_THROWS(search::grid(2.0, 0.1, 1.0));
}

TEST_CASE("families") {
    auto fam = search::delay_family(example1(1.0));
    CHECK(fam(1.3).delays == std::vector<double>{1.3});
    auto multi = delaycert::linear_multiple({{{-2}}, {{0.5}}, {{0.5}}}, {0.5, 1.0});
    CHECK(search::delay_family(multi)(2.0).delays == std::vector<double>{1.0, 2.0});
    CHECK_THROWS(search::param_family(example1(1.0), "a"));
    CHECK(search::param_family(example1(1.0), "tau")(0.7).delays == std::vector<double>{0.7});
}

TEST_CASE("bisection brackets the example 1 margin at d = 2") {
    auto r = search::margin_bisection(search::delay_family(example1(1.0)), 1.5, 1.8, 0.005, quick(2));
    CHECK(r.hi - r.lo <= 0.005);
    CHECK(r.certified < r.uncertified);
    CHECK(r.certified == doctest::Approx(1.6249).epsilon(0.005));
    REQUIRE(r.certificate.has_value());
    CHECK(r.certificate->delays.back() == r.certified);
    REQUIRE(r.verification.has_value());
    CHECK_MESSAGE(r.verification->passed, r.verification->message);
    CHECK(r.solver_failures == 0);
    CHECK(r.crosscheck.empty());
    for (const auto& s : r.solves)
        if (s.verdict == st::Verdict::Certified) CHECK(s.value <= r.certified);
}

TEST_CASE("bisection from the other side finds the lower margin") {
    auto r = search::margin_bisection(search::delay_family(example1(1.0)), 0.3, 0.05, 0.002, quick(2));
    CHECK(r.certified > r.uncertified);
    CHECK(r.certified == doctest::Approx(0.10017).epsilon(0.02));
}

TEST_CASE("bisection rejects brackets with equal verdicts") {
    auto fam = search::delay_family(example1(1.0));
    CHECK_THROWS_AS(search::margin_bisection(fam, 0.5, 1.0, 0.01, quick(2)), std::invalid_argument);
    CHECK_THROWS_AS(search::margin_bisection(fam, 1.8, 2.0, 0.01, quick(2)), std::invalid_argument);
    CHECK_THROWS_AS(search::margin_bisection(fam, 1.0, 2.0, 0.0, quick(2)), std::invalid_argument);
}

TEST_CASE("a failed solve inside the bracket triggers a sweep cross-check") {
    auto base = search::delay_family(example1(1.0));
    // Pretend the solver breaks down at the first midpoint.
    search::Family flaky = [base](double tau) {
        if (std::abs(tau - 1.1) < 1e-9) throw std::invalid_argument("injected failure");
        return base(tau);
    };
    auto o = quick(2);
    o.verify = false;
    auto r = search::margin_bisection(flaky, 0.2, 2.0, 0.2, o);
    CHECK(r.solver_failures == 1);
    REQUIRE(r.crosscheck.size() == 5);
    // The sweep exposes the non-monotone picture: 1.55 certifies although 1.1 "did not".
    CHECK(r.crosscheck[2].value == doctest::Approx(1.1));
    CHECK(r.crosscheck[2].verdict == st::Verdict::Unknown);
}

TEST_CASE("sweep matches individual solves") {
    const std::vector<double> pts{0.2, 0.6, 1.0, 1.4, 1.8};
    auto fam = search::delay_family(example1(1.0));
    auto rs = search::sweep(fam, pts, quick(2));
    REQUIRE(rs.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(rs[i].value == pts[i]);
        auto single = search::solve_at(fam, pts[i], quick(2));
        CHECK(single.verdict == rs[i].verdict);
        CHECK(single.margin == rs[i].margin);
    }
    CHECK(rs.back().verdict == st::Verdict::NotCertified);
    CHECK(rs[2].verdict == st::Verdict::Certified);
}

TEST_CASE("sweep of a delay-insensitive system certifies everywhere") {
    auto spec = delaycert::linear_single({{-1}}, {{0}}, 1.0);
    auto rs = search::sweep(search::delay_family(spec), search::grid(0.5, 0.5, 3.0), quick(2));
    for (const auto& r : rs) CHECK(r.verdict == st::Verdict::Certified);
}

TEST_CASE("region certification and the collapsed box") {
    auto spec = example1(1.0);
    spec.params = {{"tau", 0.4, 1.2}};
    spec.tau_param = "tau";
    spec.validate();
    auto res = search::region_certify(spec, 2, 2);
    REQUIRE(res.outcome.verdict == st::Verdict::Certified);
    REQUIRE(res.certificate.has_value());
    CHECK(res.certificate->delays == std::vector<double>{0.8});

    // Spot check: fixed-parameter solves at random points of the box.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.4, 1.2);
    for (int k = 0; k < 5; ++k) {
        const double tau = u(rng);
        CHECK(st::solve(st::build_single_delay(example1(tau), 2)).verdict == st::Verdict::Certified);
    }

    // A point box gives the fixed-parameter verdict.
    for (double tau : {1.0, 1.8}) {
        auto pt = example1(1.0);
        pt.params = {{"tau", tau, tau}};
        pt.tau_param = "tau";
        auto boxed = search::region_certify(pt, 4, 2).outcome.verdict;
        CHECK(boxed == st::solve(st::build_single_delay(example1(tau), 4)).verdict);
    }
}

TEST_CASE("results table JSON") {
    auto rs = search::sweep(search::delay_family(example1(1.0)), {1.0, 1.8}, quick(2));
    auto j = nlohmann::json::parse(search::to_json(rs));
    REQUIRE(j.size() == 2);
    CHECK(j[0]["verdict"] == "CERTIFIED");
    CHECK(j[1]["verdict"] == "NOT CERTIFIED");
    CHECK(j[0].contains("seconds"));
    CHECK(j[0].contains("margin"));
}
