#include "delaycert/cones.hpp"

#include <algorithm>
#include <stdexcept>

namespace delaycert::cones {

using namespace poly;

Domain Domain::interval(const Rational& tau) {
    if (sgn(tau) <= 0) throw std::invalid_argument("delay interval must have positive length");
    return Domain{{Rational(0), tau}};
}

Domain Domain::pieces(const std::vector<Rational>& delays) {
    if (delays.empty()) throw std::invalid_argument("at least one delay required");
    Domain d{{Rational(0)}};
    for (const auto& t : delays) {
        if (t <= d.bounds.back()) throw std::invalid_argument("delays must be positive and strictly increasing");
        d.bounds.push_back(t);
    }
    return d;
}

std::pair<Rational, Rational> Domain::piece_map(int i) const {
    // theta = hi(i) -> 0 and theta = lo(i) -> -b_K.
    Rational alpha = length() / width(i);
    Rational beta = -alpha * hi(i);
    alpha.canonicalize();
    beta.canonicalize();
    return {alpha, beta};
}

namespace {

int param_degree_of(const LMatrix& m, const std::vector<int>& params) {
    int d = 0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            for (const auto& [mono, c] : m(i, j).terms()) {
                int e = 0;
                for (int p : params) e += mono.exponent(p);
                d = std::max(d, e);
            }
    return d;
}

int param_degree_of(const std::vector<LMatrix>& ms, const std::vector<int>& params) {
    int d = 0;
    for (const auto& m : ms) d = std::max(d, param_degree_of(m, params));
    return d;
}

Rational moment(const Rational& lo, const Rational& hi, int k) {
    Rational a = 1, b = 1;
    for (int e = 0; e <= k; ++e) {
        a *= lo;
        b *= hi;
    }
    Rational r = (b - a) / Rational(k + 1);
    r.canonicalize();
    return r;
}

LMatrix map_kernel(const LMatrix& m, int theta, int omega, const std::pair<Rational, Rational>& mt,
                   const std::pair<Rational, Rational>& mo) {
    return m.map([&](const LPoly& p) {
        return affine_substitute(affine_substitute(p, theta, mt.first, mt.second), omega, mo.first, mo.second);
    });
}

std::pair<Rational, Rational> inverse(const std::pair<Rational, Rational>& m) {
    Rational a = 1 / m.first;
    Rational b = -m.second / m.first;
    a.canonicalize();
    b.canonicalize();
    return {a, b};
}

// sum over region terms g of g(y) * Zbar(theta)^T Q_g Zbar(omega), N x N.
LMatrix kernel_expression(sos::Program& prog, int N, const MonomialBasis& z, const Options& opts,
                          std::vector<sos::GramBlock>& grams) {
    std::vector<RPoly> terms{RPoly(Rational(1))};
    terms.insert(terms.end(), opts.region.begin(), opts.region.end());
    const int nz = static_cast<int>(z.size());
    std::vector<Monomial> zo;
    for (const auto& m : z.monomials) {
        int e = 0;
        Monomial rest = m.without(opts.theta, e);
        zo.push_back(rest * (e ? Monomial::of(opts.omega, e) : Monomial()));
    }
    LMatrix out(static_cast<std::size_t>(N), static_cast<std::size_t>(N));
    for (const auto& g : terms) {
        sos::GramBlock gb;
        gb.basis = z;
        gb.n = N;
        gb.handle = prog.sdp.add_block(N * nz);
        grams.push_back(gb);
        for (int r = 0; r < N; ++r)
            for (int c = 0; c < N; ++c) {
                LPoly acc;
                for (int a = 0; a < nz; ++a)
                    for (int b = 0; b < nz; ++b) {
                        Monomial mono = z.monomials[static_cast<std::size_t>(a)] * zo[static_cast<std::size_t>(b)];
                        int id = gb.handle.id(r * nz + a, c * nz + b);
                        for (const auto& [mg, cg] : g.terms()) acc.add(mono * mg, LinExpr::unknown(id, cg));
                    }
                out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += acc;
            }
    }
    return out;
}

MultiplierConstraint multiplier_cone(sos::Program& prog, const std::vector<LMatrix>& m, const Domain& dom, int N,
                                     int ns, int d, const Options& opts) {
    if (static_cast<int>(m.size()) != dom.size()) throw std::invalid_argument("one multiplier per piece required");
    for (const auto& mi : m)
        if (static_cast<int>(mi.rows()) != N || static_cast<int>(mi.cols()) != N)
            throw std::invalid_argument("multiplier dimension mismatch");
    Options o = opts;
    if (o.param_degree < 0) o.param_degree = param_degree_of(m, o.params);
    MultiplierConstraint out;
    out.spacing = spacing_var(prog, ns, dom, d, o);
    for (int i = 0; i < dom.size(); ++i) {
        LMatrix target = m[static_cast<std::size_t>(i)];
        for (int r = 0; r < ns; ++r)
            for (int c = 0; c < ns; ++c)
                target(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) +=
                    out.spacing.pieces[static_cast<std::size_t>(i)](static_cast<std::size_t>(r),
                                                                    static_cast<std::size_t>(c));
        sos::IntervalOptions io;
        io.label = opts.label + "[" + std::to_string(i) + "]";
        out.pieces.push_back(
            sos::interval_positivity(prog, target, opts.theta, RPoly(dom.lo(i)), RPoly(dom.hi(i)), io));
    }
    return out;
}

}  // namespace

SpacingFunction spacing_var(sos::Program& prog, int n, const Domain& dom, int d, const Options& opts) {
    if (d < 0) throw std::invalid_argument("spacing degree must be non-negative");
    const int K = dom.size();
    const auto un = static_cast<std::size_t>(n);
    MonomialBasis yb = monomial_basis(opts.params, std::max(0, opts.param_degree));
    SpacingFunction t;
    t.n = n;
    t.pieces.assign(static_cast<std::size_t>(K), LMatrix(un, un));
    const Rational m00 = moment(dom.lo(0), dom.hi(0), 0);
    // Basis e_{i,k} - (m_{i,k}/m_{0,0}) e_{0,0}, (i,k) != (0,0): every member integrates to zero.
    for (int i = 0; i < K; ++i)
        for (int k = 0; k <= d; ++k) {
            if (i == 0 && k == 0) continue;
            Rational w = moment(dom.lo(i), dom.hi(i), k) / m00;
            w.canonicalize();
            Monomial th = k ? Monomial::of(opts.theta, k) : Monomial();
            for (const auto& mu : yb.monomials) {
                if (mu.degree() < opts.param_min_degree) continue;
                if (opts.total_degree >= 0 && k + mu.degree() > opts.total_degree) continue;
                for (std::size_t r = 0; r < un; ++r)
                    for (std::size_t c = r; c < un; ++c) {
                        LinExpr v = prog.new_free();
                        t.pieces[static_cast<std::size_t>(i)](r, c).add(th * mu, v);
                        t.pieces[0](r, c).add(mu, v * (-w));
                    }
            }
        }
    for (auto& p : t.pieces)
        for (std::size_t r = 0; r < un; ++r)
            for (std::size_t c = r + 1; c < un; ++c) p(c, r) = p(r, c);
    return t;
}

LMatrix spacing_integral(const SpacingFunction& t, const Domain& dom, int theta) {
    const auto un = static_cast<std::size_t>(t.n);
    LMatrix out(un, un);
    for (int i = 0; i < dom.size(); ++i)
        for (std::size_t r = 0; r < un; ++r)
            for (std::size_t c = 0; c < un; ++c)
                out(r, c) += definite_integral(t.pieces[static_cast<std::size_t>(i)](r, c), theta, dom.lo(i), dom.hi(i));
    return out;
}

MultiplierConstraint g1(sos::Program& prog, const std::vector<LMatrix>& m, const Domain& dom, int n, int d,
                        const Options& opts) {
    return multiplier_cone(prog, m, dom, 2 * n, n, d, opts);
}

MultiplierConstraint g3(sos::Program& prog, const std::vector<LMatrix>& m, const Domain& dom, int n, int d,
                        const Options& opts) {
    const int K = dom.size();
    return multiplier_cone(prog, m, dom, (K + 2) * n, (K + 1) * n, d, opts);
}

KernelVariable g2_kernel(sos::Program& prog, int n, const Domain& dom, int d, bool piecewise, const Options& opts) {
    if (d < 0) throw std::invalid_argument("kernel degree must be non-negative");
    const int K = piecewise ? dom.size() : 1;
    const int N = n * K;
    MonomialBasis z = product_basis(monomial_basis({opts.theta}, d),
                                    monomial_basis(opts.params, std::max(0, opts.param_degree)));
    KernelVariable kv;
    kv.n = n;
    kv.hat = kernel_expression(prog, N, z, opts, kv.grams);
    kv.blocks.assign(static_cast<std::size_t>(K), std::vector<LMatrix>(static_cast<std::size_t>(K)));
    const auto un = static_cast<std::size_t>(n);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            LMatrix b = kv.hat.block(static_cast<std::size_t>(i) * un, static_cast<std::size_t>(j) * un, un, un);
            if (piecewise) b = map_kernel(b, opts.theta, opts.omega, dom.piece_map(i), dom.piece_map(j));
            kv.blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = b;
        }
    return kv;
}

KernelVariable g2_member(sos::Program& prog, const std::vector<std::vector<LMatrix>>& m, const Domain& dom, int d,
                         const Options& opts) {
    const int K = static_cast<int>(m.size());
    if (K == 0) throw std::invalid_argument("empty kernel");
    if (K > 1 && K != dom.size()) throw std::invalid_argument("kernel blocks do not match the domain pieces");
    const auto un = m[0][0].rows();
    const int N = static_cast<int>(un) * K;
    LMatrix hat(static_cast<std::size_t>(N), static_cast<std::size_t>(N));
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            LMatrix b = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (b.rows() != un || b.cols() != un) throw std::invalid_argument("kernel block dimension mismatch");
            if (K > 1) b = map_kernel(b, opts.theta, opts.omega, inverse(dom.piece_map(i)), inverse(dom.piece_map(j)));
            hat.set_block(static_cast<std::size_t>(i) * un, static_cast<std::size_t>(j) * un, b);
        }
    Options o = opts;
    if (o.param_degree < 0) o.param_degree = (param_degree_of(hat, o.params) + 1) / 2;
    MonomialBasis z =
        product_basis(monomial_basis({o.theta}, d), monomial_basis(o.params, std::max(0, o.param_degree)));
    KernelVariable kv;
    kv.n = static_cast<int>(un);
    kv.hat = kernel_expression(prog, N, z, o, kv.grams);
    kv.blocks = m;

    // When hat(theta,omega) = hat(omega,theta)^T holds symbolically, the lower
    // triangle repeats the upper one.
    const int swap = var("__kernel_swap");
    auto transposed = [&](const LPoly& p) { return rename(rename(rename(p, o.theta, swap), o.omega, o.theta), swap, o.omega); };
    bool symmetric = true;
    for (int r = 0; r < N && symmetric; ++r)
        for (int c = r; c < N && symmetric; ++c)
            symmetric = hat(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) ==
                        transposed(hat(static_cast<std::size_t>(c), static_cast<std::size_t>(r)));
    for (int r = 0; r < N; ++r)
        for (int c = symmetric ? r : 0; c < N; ++c) {
            LPoly diff = hat(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) -
                         kv.hat(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            for (const auto& [mono, e] : diff.terms()) prog.sdp.add_equality(e);
        }
    return kv;
}

std::vector<MultiplierConstraint> param_dependent(sos::Program& prog, Cone cone, const std::vector<LMatrix>& m,
                                                  const Domain& dom, int n, const std::vector<RPoly>& region, int d,
                                                  const Options& opts) {
    auto build = [&](const std::vector<LMatrix>& pieces, const Options& o) {
        return cone == Cone::G1 ? g1(prog, pieces, dom, n, d, o) : g3(prog, pieces, dom, n, d, o);
    };
    Options o = opts;
    for (const auto& g : region) {
        auto v = g.variables();
        o.params.insert(o.params.end(), v.begin(), v.end());
    }
    std::sort(o.params.begin(), o.params.end());
    o.params.erase(std::unique(o.params.begin(), o.params.end()), o.params.end());
    o.param_degree = -1;
    if (std::find(o.params.begin(), o.params.end(), o.theta) != o.params.end())
        throw std::invalid_argument("region polynomials must not depend on theta");

    std::vector<MultiplierConstraint> out;
    if (region.empty()) {
        out.push_back(build(m, o));
        return out;
    }
    int dth = 0;
    for (const auto& mi : m) dth = std::max(dth, mi.degree_in(o.theta));
    const int dy = param_degree_of(m, o.params);
    const int even = dy + (dy % 2);
    std::vector<LMatrix> s0 = m;
    std::vector<std::vector<LMatrix>> multipliers;
    for (const auto& g : region) {
        MonomialBasis basis =
            product_basis(monomial_basis({o.theta}, dth), monomial_basis(o.params, std::max(0, even - g.degree())));
        std::vector<LMatrix> sk;
        for (std::size_t i = 0; i < m.size(); ++i) {
            LMatrix s = prog.unknown_poly(m[i].rows(), m[i].cols(), basis, true);
            s0[i] -= s.map([&](const LPoly& p) { return p * g; });
            sk.push_back(s);
        }
        multipliers.push_back(sk);
    }
    out.push_back(build(s0, o));
    for (const auto& sk : multipliers) out.push_back(build(sk, o));
    return out;
}

DMatrix solved(const LMatrix& m, const std::vector<double>& values) {
    return m.map([&](const LPoly& p) { return assign(p, values); });
}

}  // namespace delaycert::cones
