#include "doctest.h"

#include <random>
#include <sstream>

#include "delaycert/sdp.hpp"

using namespace delaycert;
using namespace delaycert::sdp;

namespace {
int count_lines(const std::string& s) {
    int n = 0;
    for (char ch : s) n += ch == '\n';
    return n;
}

Eigen::MatrixXd random_spd(std::mt19937& rng, int n) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = g(rng);
    return B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}
}  // namespace

TEST_CASE("declare handles") {
    SdpProblem p;
    auto a = p.add_block(1);
    auto b = p.add_block(10);
    auto c = p.add_block(3);
    CHECK(a.block != b.block);
    CHECK(b.block != c.block);
    CHECK(b.id(2, 5) == b.id(5, 2));
    CHECK(p.num_vars() == 1 + 55 + 6);
    CHECK_THROWS(p.add_block(0));
    CHECK_THROWS(p.add_equality({{999, 1.0}}, 0.0));
    CHECK_THROWS(p.add_equality({}, 0.0));
}

TEST_CASE("duplicate (i,j)/(j,i) references fold") {
    SdpProblem p;
    auto b = p.add_block(2);
    p.add_equality({{b.id(0, 1), 1.0}, {b.id(1, 0), 2.0}}, 1.0);
    REQUIRE(p.constraints()[0].terms.size() == 1);
    CHECK(p.constraints()[0].terms[0].coef == 3.0);
}

TEST_CASE("1x1 block fixed to 2 is feasible") {
    SdpProblem p;
    auto b = p.add_block(1);
    p.add_equality({{b.id(0, 0), 1.0}}, 2.0);
    auto sol = solve(p);
    REQUIRE(sol.status == Status::Feasible);
    CHECK(sol.blocks[0](0, 0) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("2x2 block forced to an indefinite matrix is infeasible with a verified ray") {
    SdpProblem p;
    auto b = p.add_block(2);
    p.add_equality({{b.id(0, 0), 1.0}}, 1.0);
    p.add_equality({{b.id(0, 1), 1.0}}, 2.0);
    p.add_equality({{b.id(1, 1), 1.0}}, 1.0);
    auto sol = solve(p);
    REQUIRE(sol.status == Status::Infeasible);
    auto chk = check_infeasibility_ray(p, sol.dual_ray);
    CHECK(chk.valid);
    CHECK(chk.min_eig >= -1e-6);
}

TEST_CASE("inconsistent equalities are infeasible with a ray") {
    SdpProblem p;
    auto b = p.add_block(1);
    auto f = p.add_free();
    p.add_equality({{b.id(0, 0), 1.0}, {f.id, 1.0}}, 1.0);
    p.add_equality({{b.id(0, 0), 2.0}, {f.id, 2.0}}, 3.0);
    auto sol = solve(p);
    REQUIRE(sol.status == Status::Infeasible);
    CHECK(check_infeasibility_ray(p, sol.dual_ray).valid);
}

TEST_CASE("x^4 + 1 has a Gram matrix over [1, x, x^2]") {
    // Coefficient matching: 1: q00, x: 2q01, x²: 2q02+q11, x³: 2q12, x⁴: q22.
    SdpProblem p;
    auto q = p.add_block(3);
    p.add_equality({{q.id(0, 0), 1.0}}, 1.0);
    p.add_equality({{q.id(0, 1), 2.0}}, 0.0);
    p.add_equality({{q.id(0, 2), 2.0}, {q.id(1, 1), 1.0}}, 0.0);
    p.add_equality({{q.id(1, 2), 2.0}}, 0.0);
    p.add_equality({{q.id(2, 2), 1.0}}, 1.0);
    auto sol = solve(p);
    REQUIRE(sol.status == Status::Feasible);
    const auto& Q = sol.blocks[0];
    CHECK(Q(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(Q(2, 2) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(2 * Q(0, 2) + Q(1, 1) == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(sol.min_eigenvalues[0] >= -1e-8);
}

TEST_CASE("free scalars are recovered") {
    SdpProblem p;
    auto y = p.add_block(1);
    auto x = p.add_free();
    p.add_equality({{y.id(0, 0), 1.0}, {x.id, -1.0}}, 1.0);
    p.add_equality({{x.id, 1.0}}, 3.0);
    auto sol = solve(p);
    REQUIRE(sol.status == Status::Feasible);
    CHECK(sol.free[0] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(sol.blocks[0](0, 0) == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("maximization with a bounded objective") {
    // max t s.t. [[1, t], [t, 1]] ⪰ 0 → t = 1.
    SdpProblem p;
    auto b = p.add_block(2);
    p.add_equality({{b.id(0, 0), 1.0}}, 1.0);
    p.add_equality({{b.id(1, 1), 1.0}}, 1.0);
    p.set_objective({{b.id(0, 1), 1.0}});
    auto sol = solve(p);
    REQUIRE(sol.status == Status::Feasible);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.dual_objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solve is deterministic") {
    SdpProblem p;
    auto b = p.add_block(3);
    auto f = p.add_free();
    p.add_equality({{b.id(0, 0), 1.0}, {b.id(1, 1), 1.0}, {b.id(2, 2), 1.0}}, 1.0);
    p.add_equality({{b.id(0, 1), 1.0}, {f.id, 1.0}}, 0.25);
    p.set_objective({{b.id(0, 2), 1.0}, {b.id(1, 2), 0.5}});
    auto s1 = solve(p), s2 = solve(p);
    REQUIRE(s1.status == Status::Feasible);
    CHECK(s1.iterations == s2.iterations);
    CHECK((s1.blocks[0] - s2.blocks[0]).norm() == 0.0);
    CHECK(s1.free == s2.free);
}

TEST_CASE("parallel Schur kernel matches the serial reference") {
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    ConeLayout L({4, 1, 7, 1, 3});
    const int m = 23;
    Eigen::MatrixXd A(m, L.dim);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < L.dim; ++j) A(i, j) = g(rng);
    std::vector<Eigen::MatrixXd> W;
    for (int n : L.sizes) W.push_back(random_spd(rng, n));
    Eigen::MatrixXd Mp = schur_complement(A, W, L);
    Eigen::MatrixXd Ms = schur_complement_serial(A, W, L);
    CHECK((Mp - Ms).cwiseAbs().maxCoeff() <= 1e-10 * (1 + Ms.cwiseAbs().maxCoeff()));
}

TEST_CASE("svec/smat round trip preserves inner products") {
    std::mt19937 rng(9);
    Eigen::MatrixXd X = random_spd(rng, 5), Y = random_spd(rng, 5);
    CHECK((smat(svec(X), 5) - X).norm() < 1e-12);
    CHECK(svec(X).dot(svec(Y)) == doctest::Approx((X * Y).trace()).epsilon(1e-12));
}

TEST_CASE("SDPA export of the smallest problem is five lines") {
    SdpProblem p;
    auto b = p.add_block(1);
    p.add_equality({{b.id(0, 0), 1.0}}, 2.0);
    auto text = export_sdpa(p);
    CHECK(count_lines(text) == 5);
    CHECK(text == "1\n1\n1\n2\n1 1 1 1 1\n");
}

TEST_CASE("SDPA round trip with free variables and off-diagonal entries") {
    SdpProblem p;
    auto b = p.add_block(3);
    auto c = p.add_block(1);
    auto f1 = p.add_free();
    auto f2 = p.add_free();
    p.add_equality({{b.id(0, 1), 0.1}, {f1.id, -1.0 / 3.0}, {c.id(0, 0), 2.0}}, 1.0 / 7.0);
    p.add_equality({{b.id(2, 2), 1e-300}, {f2.id, 5.0}}, -2.5);
    p.set_objective({{c.id(0, 0), 1.0}, {f2.id, 0.3}});
    auto text = export_sdpa(p);
    auto q = parse_sdpa(text);
    CHECK(q == p);
    CHECK(export_sdpa(q) == text);
}

TEST_CASE("SDPA parser tolerates decorations and plain diagonal blocks") {
    std::string text =
        "\"comment line\n"
        "1 = mDIM\n"
        "2 = nBLOCK\n"
        "{2, -2}\n"
        "{1.0}\n"
        "0 1 1 2 0.5\n"
        "1 1 1 1 1\n"
        "1 2 2 2 1\n";
    auto p = parse_sdpa(text);
    CHECK(p.num_blocks() == 3);
    CHECK(p.num_free() == 0);
    CHECK(p.constraints().size() == 1);
    CHECK_THROWS(parse_sdpa("1\n1\n"));
}
