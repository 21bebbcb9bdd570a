#include <map>
#include <stdexcept>

#include "delaycert/stability.hpp"
#include "stability_detail.hpp"

namespace delaycert::stability {

using namespace poly;
using namespace detail;

namespace detail {

LMatrix at(const LMatrix& m, int v, const Rational& value) {
    return m.map([&](const LPoly& p) { return substitute(p, v, value); });
}

LMatrix diff(const LMatrix& m, int v) {
    return m.map([&](const LPoly& p) { return differentiate(p, v); });
}

LMatrix kernel_trace(const LMatrix& r, int theta, int omega, const Rational& value) {
    return r.map([&](const LPoly& p) { return rename(substitute(p, theta, value), omega, theta); });
}

LMatrix identity_times(std::size_t n, const LinExpr& e) {
    LMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = LPoly(e);
    return m;
}

LMatrix add_identity(const LMatrix& m, const LinExpr& e) { return m + identity_times(m.rows(), e); }

LinExpr margin_variable(Build& b) {
    auto h = b.prog.sdp.add_block(1);
    b.margin_var = h.id(0, 0);
    return LinExpr::unknown(b.margin_var);
}

void finalize(Build& b, double scale) {
    // Without a normalization the cone is scale invariant and max margin is unbounded.
    // The slack block keeps the zero certificate feasible.
    auto slack = b.prog.sdp.add_block(1);
    (void)slack;
    std::vector<sdp::Term> trace;
    for (int k = 0; k < b.prog.sdp.num_blocks(); ++k) {
        auto h = b.prog.sdp.block(k);
        for (int i = 0; i < h.size; ++i) trace.push_back({h.id(i, i), 1.0});
    }
    b.prog.sdp.add_equality(trace, 1.0);
    b.prog.sdp.set_objective({{b.margin_var, 1.0}});
    b.threshold = 1e-6 * scale;
}

}  // namespace detail

namespace {

void require_linear(const SystemSpec& spec, int d) {
    spec.validate();
    if (spec.kind != SystemKind::LinearSingle && spec.kind != SystemKind::LinearMultiple)
        throw std::invalid_argument("linear delay system expected");
    if (!spec.params.empty()) throw std::invalid_argument("parameters need the parameter-dependent builder");
    if (d < 0) throw std::invalid_argument("degree must be non-negative");
}

}  // namespace

Build build_single_delay(const SystemSpec& spec, int d) {
    require_linear(spec, d);
    if (spec.num_delays() != 1) throw std::invalid_argument("single-delay builder needs exactly one delay");
    Build b;
    b.spec = spec;
    b.degree = d;
    b.builder = "single-delay";
    const int n = spec.n;
    const auto un = static_cast<std::size_t>(n);
    const Rational tau = to_rational(spec.delays[0]);
    b.time_scale = spec.delays[0];
    b.domain = cones::Domain::interval(Rational(1));
    const int th = b.sym.theta, om = b.sym.omega;
    cones::Options opts;
    opts.theta = th;
    opts.omega = om;

    const RMatrix& A = spec.A[0];
    const RMatrix& B = spec.A[1];
    const LinExpr eps = margin_variable(b);

    MonomialBasis zb = monomial_basis({th}, d);
    LMatrix P = b.prog.symmetric_unknown(un);
    LMatrix Q = b.prog.unknown_poly(un, un, zb, false);
    LMatrix S = b.prog.unknown_poly(un, un, zb, true);
    opts.label = "R";
    auto kernel = cones::g2_kernel(b.prog, n, b.domain, d / 2, false, opts);
    LMatrix R = kernel.blocks[0][0];

    // [P - eps I, Q; Q^T, S] in G1.
    LMatrix M(2 * un, 2 * un);
    M.set_block(0, 0, add_identity(P, -eps));
    M.set_block(0, un, Q);
    M.set_block(un, 0, Q.transpose());
    M.set_block(un, un, S);
    opts.label = "positivity";
    cones::g1(b.prog, {M}, b.domain, n, d, opts);

    // tau * dV/dt = int_{-1}^0 xi^T D xi ds - int int psi^T (dR/ds + dR/dr) psi, xi = [x; x(t-tau); x(t+tau s)].
    const LMatrix Q0 = at(Q, th, 0), Q1 = at(Q, th, -1);
    LMatrix D11 = (P * A + A.transpose() * P).scaled(tau) + Q0 + Q0.transpose() + at(S, th, 0);
    D11 = add_identity(D11, eps * tau);
    LMatrix D12 = (P * B).scaled(tau) - Q1;
    LMatrix D13 = (A.transpose() * Q).scaled(tau) - diff(Q, th) + kernel_trace(R, th, om, 0);
    LMatrix D22 = -at(S, th, -1);
    LMatrix D23 = (B.transpose() * Q).scaled(tau) - kernel_trace(R, th, om, -1);
    LMatrix D33 = -diff(S, th);
    LMatrix D(3 * un, 3 * un);
    D.set_block(0, 0, D11);
    D.set_block(0, un, D12);
    D.set_block(0, 2 * un, D13);
    D.set_block(un, 0, D12.transpose());
    D.set_block(un, un, D22);
    D.set_block(un, 2 * un, D23);
    D.set_block(2 * un, 0, D13.transpose());
    D.set_block(2 * un, un, D23.transpose());
    D.set_block(2 * un, 2 * un, D33);
    opts.label = "derivative";
    cones::g3(b.prog, {-D}, b.domain, n, d, opts);

    opts.label = "kernel-derivative";
    LMatrix L = diff(R, th) + diff(R, om);
    cones::g2_member(b.prog, {{L}}, b.domain, d / 2, opts);

    b.lin.P = P;
    b.lin.Q = {Q};
    b.lin.S = {S};
    b.lin.R = {{R}};
    b.lin.D = {D};
    b.lin.L = {{L}};
    finalize(b, spec.scale());
    return b;
}

Build build_multiple_delay(const SystemSpec& spec, int d) {
    require_linear(spec, d);
    Build b;
    b.spec = spec;
    b.degree = d;
    b.builder = "multiple-delay";
    const int n = spec.n;
    const int K = spec.num_delays();
    const auto un = static_cast<std::size_t>(n);
    const auto uK = static_cast<std::size_t>(K);
    const Rational T = to_rational(spec.delays.back());
    b.time_scale = spec.delays.back();
    std::vector<Rational> h;  // normalized delays h_1 .. h_K, h_K = 1
    for (double t : spec.delays) {
        Rational r = to_rational(t) / T;
        r.canonicalize();
        h.push_back(r);
    }
    b.domain = cones::Domain::pieces(h);
    auto hk = [&](int k) { return k == 0 ? Rational(0) : h[static_cast<std::size_t>(k) - 1]; };
    const int th = b.sym.theta, om = b.sym.omega;
    cones::Options opts;
    opts.theta = th;
    opts.omega = om;

    const std::vector<RMatrix>& A = spec.A;
    const LinExpr eps = margin_variable(b);

    MonomialBasis zb = monomial_basis({th}, d);
    LMatrix P = b.prog.symmetric_unknown(un);
    std::vector<LMatrix> Q, S;  // piece j = 1..K stored at j-1
    for (int j = 0; j < K; ++j) {
        Q.push_back(b.prog.unknown_poly(un, un, zb, false));
        S.push_back(b.prog.unknown_poly(un, un, zb, true));
    }
    opts.label = "R";
    auto kernel = cones::g2_kernel(b.prog, n, b.domain, d / 2, true, opts);
    const auto& R = kernel.blocks;
    auto Qp = [&](int j) -> const LMatrix& { return Q[static_cast<std::size_t>(j) - 1]; };
    auto Sp = [&](int j) -> const LMatrix& { return S[static_cast<std::size_t>(j) - 1]; };
    auto Rp = [&](int i, int j) -> const LMatrix& {
        return R[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1];
    };

    std::vector<LMatrix> Ms;
    for (int j = 1; j <= K; ++j) {
        LMatrix M(2 * un, 2 * un);
        M.set_block(0, 0, add_identity(P, -eps));
        M.set_block(0, un, Qp(j));
        M.set_block(un, 0, Qp(j).transpose());
        M.set_block(un, un, Sp(j));
        Ms.push_back(M);
    }
    opts.label = "positivity";
    cones::g1(b.prog, Ms, b.domain, n, d, opts);

    // xi = [x(t); x(t - tau_1); ...; x(t - tau_K); x(t + T s)], s on piece j.
    const std::size_t N1 = (uK + 1) * un;
    LMatrix D11(N1, N1);
    {
        LMatrix c = (P * A[0] + A[0].transpose() * P).scaled(T) + at(Qp(1), th, 0) + at(Qp(1), th, 0).transpose() +
                    at(Sp(1), th, 0);
        D11.set_block(0, 0, add_identity(c, eps * T));
        for (int k = 1; k <= K; ++k) {
            LMatrix off = (P * A[static_cast<std::size_t>(k)]).scaled(T) - at(Qp(k), th, -hk(k));
            if (k < K) off += at(Qp(k + 1), th, -hk(k));
            D11.set_block(0, static_cast<std::size_t>(k) * un, off);
            D11.set_block(static_cast<std::size_t>(k) * un, 0, off.transpose());
            LMatrix diag = -at(Sp(k), th, -hk(k));
            if (k < K) diag += at(Sp(k + 1), th, -hk(k));
            D11.set_block(static_cast<std::size_t>(k) * un, static_cast<std::size_t>(k) * un, diag);
        }
    }
    std::vector<LMatrix> minus_D;
    b.lin.D.clear();
    for (int j = 1; j <= K; ++j) {
        LMatrix D12(N1, un);
        for (int k = 0; k <= K; ++k) {
            LMatrix row = (A[static_cast<std::size_t>(k)].transpose() * Qp(j)).scaled(T);
            if (k == 0) row -= diff(Qp(j), th);
            if (k < K) row += kernel_trace(Rp(k + 1, j), th, om, -hk(k));
            if (k >= 1) row -= kernel_trace(Rp(k, j), th, om, -hk(k));
            D12.set_block(static_cast<std::size_t>(k) * un, 0, row);
        }
        LMatrix D(N1 + un, N1 + un);
        D.set_block(0, 0, D11);
        D.set_block(0, N1, D12);
        D.set_block(N1, 0, D12.transpose());
        D.set_block(N1, N1, -diff(Sp(j), th));
        b.lin.D.push_back(D);
        minus_D.push_back(-D);
    }
    opts.label = "derivative";
    cones::g3(b.prog, minus_D, b.domain, n, d, opts);

    std::vector<std::vector<LMatrix>> L(uK, std::vector<LMatrix>(uK));
    for (int i = 1; i <= K; ++i)
        for (int j = 1; j <= K; ++j)
            L[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1] =
                diff(Rp(i, j), th) + diff(Rp(i, j), om);
    opts.label = "kernel-derivative";
    cones::g2_member(b.prog, L, b.domain, d / 2, opts);

    b.lin.P = P;
    b.lin.Q = Q;
    b.lin.S = S;
    b.lin.R = R;
    b.lin.L = L;
    finalize(b, spec.scale());
    return b;
}

}  // namespace delaycert::stability

namespace delaycert::stability {

Build build_distributed_delay(const SystemSpec& spec, int d) {
    spec.validate();
    if (spec.kind != SystemKind::LinearDistributed) throw std::invalid_argument("distributed-delay system expected");
    if (d < 0) throw std::invalid_argument("degree must be non-negative");
    const int th = var("theta");
    if (spec.kernel.degree_in(th) > d) throw std::invalid_argument("distributed kernel degree exceeds d");
    Build b;
    b.spec = spec;
    b.degree = d;
    b.builder = "distributed-delay";
    const int n = spec.n;
    const auto un = static_cast<std::size_t>(n);
    const Rational tau = to_rational(spec.delays[0]);
    b.time_scale = spec.delays[0];
    b.domain = cones::Domain::interval(Rational(1));
    const int om = b.sym.omega;
    cones::Options opts;
    opts.theta = th;
    opts.omega = om;

    const RMatrix& A0 = spec.A[0];
    // int_{-tau}^0 A(theta) x(t+theta) = int_{-1}^0 At(s) x(t + tau s) ds with At(s) = tau A(tau s).
    const RMatrix At = spec.kernel.map([&](const RPoly& p) { return affine_substitute(p, th, tau, Rational(0)); })
                           .scaled(tau);
    const RMatrix At_om = At.map([&](const RPoly& p) { return rename(p, th, om); });
    const LinExpr eps = margin_variable(b);

    MonomialBasis zb = monomial_basis({th}, d);
    LMatrix P = b.prog.symmetric_unknown(un);
    LMatrix Q = b.prog.unknown_poly(un, un, zb, false);
    LMatrix S = b.prog.unknown_poly(un, un, zb, true);
    opts.label = "R";
    auto kernel = cones::g2_kernel(b.prog, n, b.domain, d / 2, false, opts);
    LMatrix R = kernel.blocks[0][0];
    const LMatrix Q_om = Q.map([&](const LPoly& p) { return rename(p, th, om); });

    LMatrix M(2 * un, 2 * un);
    M.set_block(0, 0, add_identity(P, -eps));
    M.set_block(0, un, Q);
    M.set_block(un, 0, Q.transpose());
    M.set_block(un, un, S);
    opts.label = "positivity";
    cones::g1(b.prog, {M}, b.domain, n, d, opts);

    const LMatrix Q0 = at(Q, th, 0);
    LMatrix D11 = (P * A0 + A0.transpose() * P).scaled(tau) + Q0 + Q0.transpose() + at(S, th, 0);
    D11 = add_identity(D11, eps * tau);
    LMatrix D12 = -at(Q, th, -1);
    LMatrix D13 = (A0.transpose() * Q).scaled(tau) + P * At - diff(Q, th) + kernel_trace(R, th, om, 0);
    LMatrix D22 = -at(S, th, -1);
    LMatrix D23 = -kernel_trace(R, th, om, -1);
    LMatrix D33 = -diff(S, th);
    LMatrix D(3 * un, 3 * un);
    D.set_block(0, 0, D11);
    D.set_block(0, un, D12);
    D.set_block(0, 2 * un, D13);
    D.set_block(un, 0, D12.transpose());
    D.set_block(un, un, D22);
    D.set_block(un, 2 * un, D23);
    D.set_block(2 * un, 0, D13.transpose());
    D.set_block(2 * un, un, D23.transpose());
    D.set_block(2 * un, 2 * un, D33);
    opts.label = "derivative";
    cones::g3(b.prog, {-D}, b.domain, n, d, opts);

    opts.label = "kernel-derivative";
    LMatrix L = diff(R, th) + diff(R, om) - At.transpose() * Q_om - Q.transpose() * At_om;
    cones::g2_member(b.prog, {{L}}, b.domain, d, opts);

    b.lin.P = P;
    b.lin.Q = {Q};
    b.lin.S = {S};
    b.lin.R = {{R}};
    b.lin.D = {D};
    b.lin.L = {{L}};
    finalize(b, spec.scale());
    return b;
}

}  // namespace delaycert::stability

namespace delaycert::stability {

Build build_single_delay_pd(const SystemSpec& input, int d_theta, int d_param) {
    input.validate();
    // A point box carries no uncertainty; fix it instead of leaving the symbol unconstrained.
    std::map<std::string, double> points;
    for (const auto& p : input.params)
        if (p.lo == p.hi) points[p.name] = p.lo;
    const SystemSpec spec = points.empty() ? input : input.at(points);
    if (spec.kind != SystemKind::LinearSingle) throw std::invalid_argument("single-delay system expected");
    if (d_theta < 0 || d_param < 0) throw std::invalid_argument("degrees must be non-negative");
    Build b;
    b.spec = spec;
    b.degree = d_theta;
    b.builder = "single-delay-parametric";
    const int n = spec.n;
    const auto un = static_cast<std::size_t>(n);
    const int th = b.sym.theta, om = b.sym.omega;
    const std::vector<int> y = spec.param_vars();
    const std::vector<RPoly> region = spec.region();
    const RPoly tau = spec.tau_param ? RPoly::variable(var(*spec.tau_param)) : RPoly(to_rational(spec.delays[0]));
    b.time_scale = spec.tau_param ? spec.param(*spec.tau_param)->hi : spec.delays[0];
    b.domain = cones::Domain::interval(Rational(1));
    cones::Options opts;
    opts.theta = th;
    opts.omega = om;
    opts.params = y;

    auto times = [](const LMatrix& m, const RPoly& p) { return m.map([&](const LPoly& e) { return e * p; }); };
    const RMatrix& A = spec.A[0];
    const RMatrix& B = spec.A[1];
    const LinExpr eps = margin_variable(b);

    MonomialBasis yb = monomial_basis(y, d_param);
    LMatrix P = b.prog.unknown_poly(un, un, yb, true);
    MonomialBasis zb = product_basis(monomial_basis({th}, d_theta), yb);
    LMatrix Q = b.prog.unknown_poly(un, un, zb, false);
    LMatrix S = b.prog.unknown_poly(un, un, zb, true);
    cones::Options ko = opts;
    ko.param_degree = d_param / 2;
    ko.region = region;
    ko.label = "R";
    auto kernel = cones::g2_kernel(b.prog, n, b.domain, d_theta / 2, false, ko);
    LMatrix R = kernel.blocks[0][0];

    LMatrix M(2 * un, 2 * un);
    M.set_block(0, 0, add_identity(P, -eps));
    M.set_block(0, un, Q);
    M.set_block(un, 0, Q.transpose());
    M.set_block(un, un, S);
    opts.label = "positivity";
    cones::param_dependent(b.prog, cones::Cone::G1, {M}, b.domain, n, region, d_theta, opts);

    const LMatrix Q0 = at(Q, th, 0);
    LMatrix D11 = times(P * A + A.transpose() * P, tau) + Q0 + Q0.transpose() + at(S, th, 0);
    D11 += times(identity_times(un, eps), tau);
    LMatrix D12 = times(P * B, tau) - at(Q, th, -1);
    LMatrix D13 = times(A.transpose() * Q, tau) - diff(Q, th) + kernel_trace(R, th, om, 0);
    LMatrix D22 = -at(S, th, -1);
    LMatrix D23 = times(B.transpose() * Q, tau) - kernel_trace(R, th, om, -1);
    LMatrix D33 = -diff(S, th);
    LMatrix D(3 * un, 3 * un);
    D.set_block(0, 0, D11);
    D.set_block(0, un, D12);
    D.set_block(0, 2 * un, D13);
    D.set_block(un, 0, D12.transpose());
    D.set_block(un, un, D22);
    D.set_block(un, 2 * un, D23);
    D.set_block(2 * un, 0, D13.transpose());
    D.set_block(2 * un, un, D23.transpose());
    D.set_block(2 * un, 2 * un, D33);
    opts.label = "derivative";
    cones::param_dependent(b.prog, cones::Cone::G3, {-D}, b.domain, n, region, d_theta, opts);

    ko.label = "kernel-derivative";
    ko.param_degree = -1;
    const LMatrix L = diff(R, th) + diff(R, om);
    cones::g2_member(b.prog, {{L}}, b.domain, d_theta / 2, ko);

    b.lin.P = P;
    b.lin.Q = {Q};
    b.lin.S = {S};
    b.lin.R = {{R}};
    b.lin.D = {D};
    b.lin.L = {{L}};
    finalize(b, spec.scale());
    return b;
}

}  // namespace delaycert::stability
