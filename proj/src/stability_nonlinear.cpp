#include <algorithm>
#include <stdexcept>

#include "delaycert/stability.hpp"
#include "stability_detail.hpp"

namespace delaycert::stability {

using namespace poly;
using namespace detail;

namespace {

struct Grading {
    int lo = 1 << 20, hi = -1;  // state degree range over the terms
    int other = 0;              // largest degree in the remaining variables
};

Grading grading(const LPoly& p, const std::vector<int>& states) {
    Grading g;
    for (const auto& [m, c] : p.terms()) {
        int s = 0;
        for (int v : states) s += m.exponent(v);
        g.lo = std::min(g.lo, s);
        g.hi = std::max(g.hi, s);
        g.other = std::max(g.other, m.degree() - s);
    }
    if (g.hi < 0) g.lo = 0;
    return g;
}

Grading grading(const RPoly& p, const std::vector<int>& states) { return grading(to_affine(p), states); }

int floor_half(int v) { return v <= 0 ? 0 : v / 2; }
int ceil_half(int v) { return v <= 0 ? 0 : (v + 1) / 2; }

/// Monomials x^a y^b with lo <= |a| <= hi (a over states) and |b| <= other.
MonomialBasis graded_basis(const std::vector<int>& states, const std::vector<int>& others, int lo, int hi,
                           int other) {
    std::vector<int> vars = states;
    vars.insert(vars.end(), others.begin(), others.end());
    std::sort(vars.begin(), vars.end());
    MonomialBasis all = monomial_basis(vars, std::max(0, hi) + std::max(0, other));
    MonomialBasis out;
    out.vars = vars;
    out.degree = all.degree;
    if (hi < lo) return out;
    for (const auto& m : all.monomials) {
        int s = 0;
        for (int v : states) s += m.exponent(v);
        if (s >= lo && s <= hi && m.degree() - s <= other) out.monomials.push_back(m);
    }
    return out;
}

std::vector<int> others_of(const LPoly& p, const std::vector<int>& states) {
    std::vector<int> o;
    for (int v : p.variables())
        if (std::find(states.begin(), states.end(), v) == states.end()) o.push_back(v);
    return o;
}

/// target (- sum g_i sigma_i) in Sigma_s with Gram bases confined to the Newton
/// polytope's state-degree range; keeps an interior point whenever one exists.
sos::SosConstraint graded_sos(sos::Program& prog, const LPoly& target, const std::vector<int>& states,
                              const std::vector<RPoly>& region, const std::string& label) {
    const Grading g = grading(target, states);
    std::vector<int> others = others_of(target, states);
    for (const auto& r : region)
        for (int v : r.variables())
            if (std::find(states.begin(), states.end(), v) == states.end() &&
                std::find(others.begin(), others.end(), v) == others.end())
                others.push_back(v);
    LMatrix t(1, 1);
    t(0, 0) = target;
    std::vector<MonomialBasis> bases;
    if (region.empty()) {
        bases.push_back(graded_basis(states, others, ceil_half(g.lo), floor_half(g.hi), floor_half(g.other)));
    } else {
        const int top = ceil_half(g.hi);
        int other = ceil_half(g.other);
        for (const auto& r : region) other = std::max(other, ceil_half(grading(r, states).other));
        bases.push_back(graded_basis(states, others, ceil_half(g.lo), top, other));
        for (const auto& r : region) {
            const Grading gr = grading(r, states);
            bases.push_back(graded_basis(states, others, std::max(0, ceil_half(g.lo - gr.lo)), top - ceil_half(gr.hi),
                                         other - ceil_half(gr.other)));
        }
    }
    return sos::sos_with_bases(prog, t, region, bases, label);
}

std::vector<int> state_vars(int delay_index, int n) {
    std::vector<int> v;
    for (int c = 0; c < n; ++c) v.push_back(state_var(delay_index, c));
    return v;
}

std::vector<int> theta_vars(int n) {
    std::vector<int> v;
    for (int c = 0; c < n; ++c) v.push_back(theta_state_var(c));
    return v;
}

std::vector<int> omega_vars(int n) {
    std::vector<int> v;
    for (int c = 0; c < n; ++c) v.push_back(omega_state_var(c));
    return v;
}

template <class C>
Poly<C> replace_vars(const Poly<C>& p, const std::vector<int>& from, const std::vector<int>& to) {
    Poly<C> r = p;
    for (std::size_t i = 0; i < from.size(); ++i)
        if (from[i] != to[i]) r = substitute(r, from[i], RPoly::variable(to[i]));
    return r;
}

/// Region polynomials copied onto each listed state copy.
std::vector<RPoly> region_copies(const SystemSpec& spec, const std::vector<std::vector<int>>& copies) {
    std::vector<RPoly> out;
    const auto x0 = state_vars(0, spec.n);
    for (const auto& g : spec.state_region)
        for (const auto& c : copies) out.push_back(replace_vars(g, x0, c));
    return out;
}

RPoly norm_power(const std::vector<int>& x, int r) {
    RPoly s;
    for (int v : x) s += RPoly::variable(v) * RPoly::variable(v);
    RPoly out(Rational(1));
    for (int k = 0; k < r; ++k) out = out * s;
    return out;
}

int lowest_state_degree(const SystemSpec& spec) {
    std::vector<int> states;
    for (int k = 0; k <= spec.num_delays(); ++k) {
        auto v = state_vars(k, spec.n);
        states.insert(states.end(), v.begin(), v.end());
    }
    int m = 1 << 20;
    for (const auto& fi : spec.f)
        if (!fi.is_zero()) m = std::min(m, grading(fi, states).lo);
    return m == (1 << 20) ? 1 : m;
}

void require_nonlinear(const SystemSpec& spec, int d) {
    spec.validate();
    if (spec.kind != SystemKind::NonlinearDelay) throw std::invalid_argument("nonlinear delay system expected");
    if (!spec.params.empty()) throw std::invalid_argument("nonlinear delay builders take no parameters");
    if (d < 2) throw std::invalid_argument("state degree must be at least 2");
}

/// Unknown polynomial in (states..., theta) with state degree in [2, d] and theta degree <= dt.
LPoly functional_unknown(sos::Program& prog, const std::vector<int>& states, int theta, int d, int dt) {
    std::vector<int> others;
    if (theta >= 0) others.push_back(theta);
    MonomialBasis b = graded_basis(states, others, 2, d, theta >= 0 ? dt : 0);
    return prog.unknown_poly(1, 1, b, false)(0, 0);
}

/// Z(x) with monomials of degree 1..k.
MonomialBasis state_monomials(const std::vector<int>& x, int k) { return graded_basis(x, {}, 1, k, 0); }

LPoly kernel_form(const LMatrix& R, const MonomialBasis& zy, const MonomialBasis& zw) {
    LPoly out;
    for (std::size_t a = 0; a < zy.size(); ++a)
        for (std::size_t b = 0; b < zw.size(); ++b)
            out += R(a, b) * RPoly::term(zy.monomials[a] * zw.monomials[b], Rational(1));
    return out;
}

LPoly gradient_dot(const LPoly& g, const std::vector<int>& x, const std::vector<RPoly>& f) {
    LPoly out;
    for (std::size_t c = 0; c < x.size(); ++c) out += differentiate(g, x[c]) * f[c];
    return out;
}

}  // namespace

Build build_nonlinear_single(const SystemSpec& spec, int d, int d_theta) {
    require_nonlinear(spec, d);
    if (spec.num_delays() != 1) throw std::invalid_argument("single-delay builder needs exactly one delay");
    const int dt = d_theta < 0 ? d : d_theta;
    Build b;
    b.spec = spec;
    b.degree = d;
    b.builder = "nonlinear-single";
    const int n = spec.n;
    const Rational tau = to_rational(spec.delays[0]);
    b.time_scale = spec.delays[0];
    b.domain = cones::Domain::interval(Rational(1));
    const int th = b.sym.theta, om = b.sym.omega;
    const auto x0 = state_vars(0, n), xd = state_vars(1, n), ps = theta_vars(n), pw = omega_vars(n);
    b.weight_power = ceil_half(lowest_state_degree(spec) + 1);
    const LinExpr alpha = margin_variable(b);

    // V = int_{-1}^0 g(x(0), x(t + tau s), s) ds + int int h(x(t + tau s), x(t + tau r), s, r).
    std::vector<int> gx = x0;
    gx.insert(gx.end(), ps.begin(), ps.end());
    const LPoly g = functional_unknown(b.prog, gx, th, d, dt);

    const MonomialBasis zy = state_monomials(ps, d / 2), zw = state_monomials(pw, d / 2);
    cones::Options ko;
    ko.theta = th;
    ko.omega = om;
    ko.label = "h";
    auto kernel = cones::g2_kernel(b.prog, static_cast<int>(zy.size()), b.domain, dt / 2, false, ko);
    const LMatrix& R = kernel.blocks[0][0];
    const LPoly h = kernel_form(R, zy, zw);

    // g - t(x(0), s) - alpha |x(0)|^2 in Sigma_s with int t = 0.
    cones::Options so;
    so.theta = th;
    so.params = x0;
    so.param_degree = d;
    so.param_min_degree = 2;
    auto t1 = cones::spacing_var(b.prog, 1, b.domain, dt, so);
    graded_sos(b.prog, g - t1.pieces[0](0, 0) - LPoly(alpha) * norm_power(x0, 1), gx,
               region_copies(spec, {x0, ps}), "positivity");

    // tau dV/dt = int ghat ds - int int (dh/ds + dh/dr).
    auto at0 = [&](const LPoly& p, int v, const Rational& value) { return substitute(p, v, value); };
    LPoly ghat = at0(replace_vars(g, ps, x0), th, 0) - at0(replace_vars(g, ps, xd), th, -1);
    ghat += gradient_dot(g, x0, spec.f).scaled(tau);
    ghat -= differentiate(g, th);
    auto first_at = [&](const std::vector<int>& x, const Rational& value) {
        // h(x, psi(s), value, s)
        LPoly p = replace_vars(replace_vars(h, ps, x), pw, ps);
        return rename(at0(p, th, value), om, th);
    };
    auto second_at = [&](const std::vector<int>& x, const Rational& value) {
        // h(psi(s), x, s, value)
        return at0(replace_vars(h, pw, x), om, value);
    };
    ghat += first_at(x0, 0) - first_at(xd, -1) + second_at(x0, 0) - second_at(xd, -1);

    std::vector<int> boundary = x0;
    boundary.insert(boundary.end(), xd.begin(), xd.end());
    std::vector<int> dx = boundary;
    dx.insert(dx.end(), ps.begin(), ps.end());
    const Grading gg = grading(ghat, dx);
    cones::Options so3 = so;
    so3.params = boundary;
    so3.param_degree = gg.hi;
    auto t3 = cones::spacing_var(b.prog, 1, b.domain, gg.other, so3);
    graded_sos(b.prog, -ghat - t3.pieces[0](0, 0) - LPoly(alpha) * norm_power(x0, b.weight_power), dx,
               region_copies(spec, {x0, xd, ps}), "derivative");

    ko.label = "h-derivative";
    const LMatrix RL = diff(R, th) + diff(R, om);
    cones::g2_member(b.prog, {{RL}}, b.domain, dt / 2, ko);

    b.nl.g = {g};
    b.nl.h = {{h}};
    b.nl.ghat = {ghat};
    b.nl.hhat = {{kernel_form(RL, zy, zw)}};
    finalize(b, spec.scale());
    return b;
}

Build build_nonlinear_multiple(const SystemSpec& spec, int d, int d_theta) {
    require_nonlinear(spec, d);
    const int dt = d_theta < 0 ? d : d_theta;
    Build b;
    b.spec = spec;
    b.degree = d;
    b.builder = "nonlinear-multiple";
    const int n = spec.n;
    const int K = spec.num_delays();
    const Rational T = to_rational(spec.delays.back());
    b.time_scale = spec.delays.back();
    std::vector<Rational> hs;
    for (double t : spec.delays) {
        Rational r = to_rational(t) / T;
        r.canonicalize();
        hs.push_back(r);
    }
    b.domain = cones::Domain::pieces(hs);
    auto hk = [&](int k) { return k == 0 ? Rational(0) : hs[static_cast<std::size_t>(k) - 1]; };
    const int th = b.sym.theta, om = b.sym.omega;
    std::vector<std::vector<int>> xk;  // x(t - tau_k), k = 0..K
    for (int k = 0; k <= K; ++k) xk.push_back(state_vars(k, n));
    const auto& x0 = xk[0];
    const auto ps = theta_vars(n), pw = omega_vars(n);
    b.weight_power = ceil_half(lowest_state_degree(spec) + 1);
    const LinExpr alpha = margin_variable(b);

    std::vector<int> gx = x0;
    gx.insert(gx.end(), ps.begin(), ps.end());
    std::vector<LPoly> g;  // piece j = 1..K at j-1
    for (int j = 0; j < K; ++j) g.push_back(functional_unknown(b.prog, gx, th, d, dt));

    const MonomialBasis zy = state_monomials(ps, d / 2), zw = state_monomials(pw, d / 2);
    const int N = static_cast<int>(zy.size());
    cones::Options ko;
    ko.theta = th;
    ko.omega = om;
    ko.label = "h";
    auto kernel = cones::g2_kernel(b.prog, N, b.domain, dt / 2, true, ko);
    std::vector<std::vector<LPoly>> h(static_cast<std::size_t>(K), std::vector<LPoly>(static_cast<std::size_t>(K)));
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                kernel_form(kernel.blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], zy, zw);
    auto G = [&](int j) -> const LPoly& { return g[static_cast<std::size_t>(j) - 1]; };
    auto H = [&](int i, int j) -> const LPoly& {
        return h[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1];
    };

    cones::Options so;
    so.theta = th;
    so.params = x0;
    so.param_degree = d;
    so.param_min_degree = 2;
    auto t1 = cones::spacing_var(b.prog, 1, b.domain, dt, so);
    const auto pos_region = region_copies(spec, {x0, ps});
    for (int j = 1; j <= K; ++j)
        graded_sos(b.prog,
                   G(j) - t1.pieces[static_cast<std::size_t>(j) - 1](0, 0) -
                       LPoly(alpha) * norm_power(x0, 1),
                   gx, pos_region, "positivity[" + std::to_string(j) + "]");

    auto at0 = [&](const LPoly& p, int v, const Rational& value) { return substitute(p, v, value); };
    // Boundary terms, shared by every piece since the pieces have total length one.
    LPoly boundary_terms;
    for (int i = 1; i <= K; ++i)
        boundary_terms += at0(replace_vars(G(i), ps, xk[static_cast<std::size_t>(i) - 1]), th, -hk(i - 1)) -
                          at0(replace_vars(G(i), ps, xk[static_cast<std::size_t>(i)]), th, -hk(i));
    auto first_at = [&](const LPoly& hij, int k) {
        LPoly p = replace_vars(replace_vars(hij, ps, xk[static_cast<std::size_t>(k)]), pw, ps);
        return rename(at0(p, th, -hk(k)), om, th);
    };
    auto second_at = [&](const LPoly& hij, int k) {
        return at0(replace_vars(hij, pw, xk[static_cast<std::size_t>(k)]), om, -hk(k));
    };

    std::vector<int> boundary;
    for (const auto& x : xk) boundary.insert(boundary.end(), x.begin(), x.end());
    std::vector<int> dx = boundary;
    dx.insert(dx.end(), ps.begin(), ps.end());
    std::vector<LPoly> ghat;
    Grading gg;
    gg.lo = 1 << 20;
    for (int j = 1; j <= K; ++j) {
        LPoly e = boundary_terms + gradient_dot(G(j), x0, spec.f).scaled(T) - differentiate(G(j), th);
        for (int i = 1; i <= K; ++i) {
            e += first_at(H(i, j), i - 1) - first_at(H(i, j), i);
            e += second_at(H(j, i), i - 1) - second_at(H(j, i), i);
        }
        const Grading gj = grading(e, dx);
        gg.lo = std::min(gg.lo, gj.lo);
        gg.hi = std::max(gg.hi, gj.hi);
        gg.other = std::max(gg.other, gj.other);
        ghat.push_back(e);
    }
    cones::Options so3 = so;
    so3.params = boundary;
    so3.param_degree = gg.hi;
    auto t3 = cones::spacing_var(b.prog, 1, b.domain, gg.other, so3);
    std::vector<std::vector<int>> copies = xk;
    copies.push_back(ps);
    const auto der_region = region_copies(spec, copies);
    for (int j = 1; j <= K; ++j)
        graded_sos(b.prog,
                   -ghat[static_cast<std::size_t>(j) - 1] - t3.pieces[static_cast<std::size_t>(j) - 1](0, 0) -
                       LPoly(alpha) * norm_power(x0, b.weight_power),
                   dx, der_region, "derivative[" + std::to_string(j) + "]");

    std::vector<std::vector<LMatrix>> L(static_cast<std::size_t>(K), std::vector<LMatrix>(static_cast<std::size_t>(K)));
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            const auto& Rij = kernel.blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            L[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = diff(Rij, th) + diff(Rij, om);
        }
    ko.label = "h-derivative";
    cones::g2_member(b.prog, L, b.domain, dt / 2, ko);

    b.nl.g = g;
    b.nl.h = h;
    b.nl.ghat = ghat;
    b.nl.hhat.assign(static_cast<std::size_t>(K), std::vector<LPoly>(static_cast<std::size_t>(K)));
    for (std::size_t i = 0; i < static_cast<std::size_t>(K); ++i)
        for (std::size_t j = 0; j < static_cast<std::size_t>(K); ++j) b.nl.hhat[i][j] = kernel_form(L[i][j], zy, zw);
    finalize(b, spec.scale());
    return b;
}

Build build_delay_independent(const SystemSpec& spec, int d) {
    spec.validate();
    if (spec.kind != SystemKind::NonlinearDelay) throw std::invalid_argument("nonlinear delay system expected");
    if (!spec.params.empty()) throw std::invalid_argument("delay-independent builder takes no parameters");
    if (d < 2) throw std::invalid_argument("state degree must be at least 2");
    Build b;
    b.spec = spec;
    b.degree = d;
    b.builder = "delay-independent";
    const int n = spec.n;
    const int K = spec.num_delays();
    std::vector<std::vector<int>> xk;
    for (int k = 0; k <= K; ++k) xk.push_back(state_vars(k, n));
    const auto& x0 = xk[0];
    b.weight_power = ceil_half(lowest_state_degree(spec) + 1);
    const LinExpr alpha = margin_variable(b);

    // V = p_0(x(t)) + sum_i int_{-tau_i}^0 p_i(x(t + theta)) d theta.
    std::vector<LPoly> p;
    for (int k = 0; k <= K; ++k) p.push_back(functional_unknown(b.prog, x0, -1, d, 0));
    const auto region0 = region_copies(spec, {x0});
    graded_sos(b.prog, p[0] - LPoly(alpha) * norm_power(x0, 1), x0, region0, "p0");
    for (int k = 1; k <= K; ++k) graded_sos(b.prog, p[static_cast<std::size_t>(k)], x0, region0, "p" + std::to_string(k));

    LPoly vdot = gradient_dot(p[0], x0, spec.f);
    for (int k = 1; k <= K; ++k)
        vdot += p[static_cast<std::size_t>(k)] - replace_vars(p[static_cast<std::size_t>(k)], x0, xk[static_cast<std::size_t>(k)]);
    std::vector<int> all;
    for (const auto& x : xk) all.insert(all.end(), x.begin(), x.end());
    graded_sos(b.prog, -vdot - LPoly(alpha) * norm_power(x0, b.weight_power), all,
               region_copies(spec, xk), "derivative");

    b.nl.p = p;
    b.nl.vdot = vdot;
    finalize(b, spec.scale());
    return b;
}

Build build_ode(const SystemSpec& spec, int d) {
    spec.validate();
    if (spec.kind != SystemKind::Ode) throw std::invalid_argument("ODE expected");
    if (d < 2) throw std::invalid_argument("degree must be at least 2");
    Build b;
    b.spec = spec;
    b.degree = d;
    b.builder = "ode";
    const int n = spec.n;
    const auto un = static_cast<std::size_t>(n);
    const auto x = state_vars(0, n);
    const auto y = spec.param_vars();
    std::vector<RPoly> region = spec.region();
    region.insert(region.end(), spec.state_region.begin(), spec.state_region.end());
    const int m = lowest_state_degree(spec);
    b.weight_power = ceil_half(m + 1);
    const LinExpr alpha = margin_variable(b);

    bool linear = !y.empty();
    for (const auto& fi : spec.f)
        if (!fi.is_zero() && (grading(fi, x).lo != 1 || grading(fi, x).hi != 1)) linear = false;

    if (linear && spec.state_region.empty()) {
        // x' = A(y) x: P(y) - alpha I and -(A^T P + P A) - alpha I in the Putinar cone of the box.
        RMatrix A(un, un);
        for (std::size_t i = 0; i < un; ++i)
            for (const auto& [mono, c] : spec.f[i].terms())
                for (std::size_t j = 0; j < un; ++j) {
                    int e = 0;
                    Monomial rest = mono.without(x[j], e);
                    if (e == 1) A(i, j).add(rest, c);
                }
        LMatrix P = b.prog.unknown_poly(un, un, monomial_basis(y, d), true);
        const int dm = std::max(0, d - 2);
        sos::putinar(b.prog, add_identity(P, -alpha), region, dm, "P");
        sos::putinar(b.prog, add_identity(-(P * A + A.transpose() * P), -alpha), region, dm, "derivative");
        b.nl.P = {P};
        finalize(b, spec.scale());
        return b;
    }

    MonomialBasis vb = graded_basis(x, y, 2, d, y.empty() ? 0 : d);
    const LPoly V = b.prog.unknown_poly(1, 1, vb, false)(0, 0);
    graded_sos(b.prog, V - LPoly(alpha) * norm_power(x, 1), x, region, "V");
    const LPoly vdot = gradient_dot(V, x, spec.f);
    graded_sos(b.prog, -vdot - LPoly(alpha) * norm_power(x, b.weight_power), x, region, "derivative");
    b.nl.p = {V};
    b.nl.vdot = vdot;
    finalize(b, spec.scale());
    return b;
}

}  // namespace delaycert::stability
