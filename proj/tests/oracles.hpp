#pragma once

// Test oracles shared by the property tests and the acceptance binary.

#include <cmath>
#include <random>
#include <vector>

#include "delaycert/quadrature.hpp"
#include "delaycert/simulate.hpp"
#include "delaycert/stability.hpp"

namespace oracle {

using namespace delaycert;
using poly::DMatrix;
using poly::DPoly;

/// Gaussian value for every SDP unknown (symmetry is implicit in the id layout), margin set to 0.
inline std::vector<double> random_values(const stability::Build& b, std::mt19937& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> v(static_cast<std::size_t>(b.prog.sdp.num_vars()));
    for (auto& x : v) x = g(rng);
    v[static_cast<std::size_t>(b.margin_var)] = 0.0;
    return v;
}

inline DMatrix assign(const poly::LMatrix& m, const std::vector<double>& v) {
    return m.map([&](const poly::LPoly& p) { return poly::assign(p, v); });
}

/// Composite Gauss-Legendre nodes on [a, b] with cells of width about `cell`.
inline QuadratureRule composite(double a, double b, double cell, int order = 4) {
    QuadratureRule out;
    const int cells = std::max(1, static_cast<int>(std::ceil((b - a) / cell - 1e-9)));
    for (int c = 0; c < cells; ++c) {
        auto q = gauss_legendre(order, a + (b - a) * c / cells, a + (b - a) * (c + 1) / cells);
        out.nodes.insert(out.nodes.end(), q.nodes.begin(), q.nodes.end());
        out.weights.insert(out.weights.end(), q.weights.begin(), q.weights.end());
    }
    return out;
}

/// tau_K dV/dt assembled from the builder's derivative data at time t along traj,
/// in the normalized coordinate s = theta / tau_K.
inline double derivative_form(const stability::Build& b, const std::vector<double>& v, const simulate::Trajectory& traj,
                              double t) {
    const auto& delays = b.spec.delays;
    const int K = static_cast<int>(delays.size()), n = b.spec.n;
    const double T = delays.back();
    const int th = b.sym.theta, om = b.sym.omega;
    auto lo = [&](int j) { return -delays[static_cast<std::size_t>(j)] / T; };
    auto hi = [&](int j) { return j == 0 ? 0.0 : -delays[static_cast<std::size_t>(j) - 1] / T; };
    auto psi = [&](double s) { return traj.at(t + T * s); };
    const double cell = 0.01 / T;
    double total = 0;

    if (!b.lin.D.empty()) {
        Eigen::VectorXd fixed((K + 1) * n);
        fixed.head(n) = traj.at(t);
        for (int k = 1; k <= K; ++k) fixed.segment(k * n, n) = traj.at(t - delays[static_cast<std::size_t>(k) - 1]);
        for (int j = 0; j < K; ++j) {
            const DMatrix D = assign(b.lin.D[static_cast<std::size_t>(j)], v);
            const auto q = composite(lo(j), hi(j), cell);
            for (std::size_t a = 0; a < q.nodes.size(); ++a) {
                Eigen::VectorXd xi((K + 2) * n);
                xi << fixed, psi(q.nodes[a]);
                Eigen::MatrixXd Dm(xi.size(), xi.size());
                for (Eigen::Index r = 0; r < xi.size(); ++r)
                    for (Eigen::Index c = 0; c < xi.size(); ++c)
                        Dm(r, c) = poly::evaluate(D(static_cast<std::size_t>(r), static_cast<std::size_t>(c)), {{th, q.nodes[a]}});
                total += q.weights[a] * xi.dot(Dm * xi);
            }
        }
        // Double integral through moments m_i[a] = int_{piece i} s^a psi(s) ds.
        int deg = 0;
        for (const auto& row : b.lin.L)
            for (const auto& l : row) deg = std::max(deg, l.degree());
        std::vector<std::vector<Eigen::VectorXd>> mom(static_cast<std::size_t>(K));
        for (int i = 0; i < K; ++i) {
            const auto q = composite(lo(i), hi(i), cell);
            mom[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(deg) + 1, Eigen::VectorXd::Zero(n));
            for (std::size_t a = 0; a < q.nodes.size(); ++a) {
                const Eigen::VectorXd x = psi(q.nodes[a]);
                double p = q.weights[a];
                for (int e = 0; e <= deg; ++e, p *= q.nodes[a]) mom[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)] += p * x;
            }
        }
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
                const DMatrix L = assign(b.lin.L[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], v);
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c)
                        for (const auto& [m, coef] : L(static_cast<std::size_t>(r), static_cast<std::size_t>(c)).terms())
                            total -= coef * mom[static_cast<std::size_t>(i)][static_cast<std::size_t>(m.exponent(th))](r) *
                                     mom[static_cast<std::size_t>(j)][static_cast<std::size_t>(m.exponent(om))](c);
            }
        return total;
    }

    // Nonlinear delay-dependent functional.
    std::map<int, double> pt;
    for (int c = 0; c < n; ++c) pt[state_var(0, c)] = traj.at(t)(c);
    for (int k = 1; k <= K; ++k)
        for (int c = 0; c < n; ++c) pt[state_var(k, c)] = traj.at(t - delays[static_cast<std::size_t>(k) - 1])(c);
    const double coarse = 0.025 / T;
    for (int j = 0; j < K; ++j) {
        const DPoly g = poly::assign(b.nl.ghat[static_cast<std::size_t>(j)], v);
        const auto q = composite(lo(j), hi(j), coarse);
        for (std::size_t a = 0; a < q.nodes.size(); ++a) {
            const Eigen::VectorXd x = psi(q.nodes[a]);
            for (int c = 0; c < n; ++c) pt[stability::theta_state_var(c)] = x(c);
            pt[th] = q.nodes[a];
            total += q.weights[a] * poly::evaluate(g, pt);
        }
    }
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            const DPoly h = poly::assign(b.nl.hhat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], v);
            if (h.is_zero()) continue;
            const auto qi = composite(lo(i), hi(i), coarse), qj = composite(lo(j), hi(j), coarse);
            std::vector<Eigen::VectorXd> xj;
            for (double s : qj.nodes) xj.push_back(psi(s));
            for (std::size_t a = 0; a < qi.nodes.size(); ++a) {
                const Eigen::VectorXd xa = psi(qi.nodes[a]);
                std::map<int, double> p2;
                for (int c = 0; c < n; ++c) p2[stability::theta_state_var(c)] = xa(c);
                p2[th] = qi.nodes[a];
                for (std::size_t w = 0; w < qj.nodes.size(); ++w) {
                    for (int c = 0; c < n; ++c) p2[stability::omega_state_var(c)] = xj[w](c);
                    p2[om] = qj.nodes[w];
                    total -= qi.weights[a] * qj.weights[w] * poly::evaluate(h, p2);
                }
            }
        }
    return total;
}

struct IdentityResult {
    double form = 0;               // tau_K dV/dt from the derivative data
    std::vector<double> errors;    // |tau_K * centred difference - form| per step
    std::vector<double> steps;
    bool quadratic = false;
    double relative_error = 0;     // at the smallest step
};

/// Random unknowns, a random polynomial history, and a centred difference of V(x_t)
/// at t = 2.5 tau_K with steps 0.08, 0.04, 0.02 (times tau_K).
inline IdentityResult derivative_identity(const stability::Build& b, std::mt19937& rng, double amplitude = 1.0) {
    const auto& spec = b.spec;
    const double T = spec.delays.back();
    const auto v = random_values(b, rng);
    const auto cert = stability::extract_certificate(b, v);
    std::normal_distribution<double> g(0.0, amplitude);
    std::vector<DPoly> phi(static_cast<std::size_t>(spec.n));
    const int th = poly::var("theta");
    for (auto& p : phi)
        for (int k = 0; k <= 2; ++k) p.add(k ? poly::Monomial::of(th, k) : poly::Monomial(), g(rng) / std::pow(T, k));
    const double h = spec.delays.front() / 200.0;
    const double t = 2.5 * T;
    auto traj = simulate::integrate(spec, simulate::polynomial_history(phi), t + 0.2 * T, h);

    IdentityResult r;
    r.form = derivative_form(b, v, traj, t);
    for (double f : {0.08, 0.04, 0.02}) {
        const double d = f * T;
        const double vp = simulate::functional_value(cert, traj.segment(t + d));
        const double vm = simulate::functional_value(cert, traj.segment(t - d));
        r.steps.push_back(d);
        r.errors.push_back(std::abs(T * (vp - vm) / (2 * d) - r.form));
    }
    const double scale = 1 + std::abs(r.form);
    r.relative_error = r.errors.back() / scale;
    r.quadratic = true;
    for (std::size_t k = 1; k < r.errors.size(); ++k) {
        if (r.errors[k] < 1e-9 * scale) continue;  // already at roundoff level
        const double ratio = r.errors[k - 1] / r.errors[k];
        r.quadratic = r.quadratic && ratio > 3.0 && ratio < 5.5;
    }
    r.quadratic = r.quadratic && r.relative_error < 1e-2;
    return r;
}

/// Random 2x2 pair (A0, A1) and a delay for the linear identity draws.
inline SystemSpec random_single(std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 0.7);
    std::uniform_real_distribution<double> tau(0.5, 1.5);
    std::vector<std::vector<double>> A(2, std::vector<double>(2)), B = A;
    for (auto& row : A)
        for (auto& x : row) x = g(rng);
    for (auto& row : B)
        for (auto& x : row) x = g(rng);
    return linear_single(A, B, tau(rng));
}

}  // namespace oracle
