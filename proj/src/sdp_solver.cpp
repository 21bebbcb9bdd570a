// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
// Mehrotra predictor-corrector steps, for
//     min cᵀx  s.t.  Ax = b,  x ∈ S₊^{n₁} × … × S₊^{n_k}  (svec coordinates),
// after free variables and redundant rows have been eliminated by QR.

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "delaycert/sdp.hpp"

namespace delaycert::sdp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct Dense {
    Eigen::MatrixXd As;  // m0 × s
    Eigen::MatrixXd Af;  // m0 × nf
    Eigen::VectorXd b;
    Eigen::VectorXd cs;  // minimization costs on svec entries
    Eigen::VectorXd cf;
};

Dense densify(const SdpProblem& p, const ConeLayout& layout) {
    Dense d;
    const int m0 = static_cast<int>(p.constraints().size());
    d.As = Eigen::MatrixXd::Zero(m0, layout.dim);
    d.Af = Eigen::MatrixXd::Zero(m0, p.num_free());
    d.b.resize(m0);
    d.cs = Eigen::VectorXd::Zero(layout.dim);
    d.cf = Eigen::VectorXd::Zero(p.num_free());
    auto place = [&](int var, double coef, auto&& sink_s, auto&& sink_f) {
        const auto& in = p.info(var);
        if (in.block < 0) {
            sink_f(in.i, coef);
            return;
        }
        const int local = var - p.block_first_id()[static_cast<std::size_t>(in.block)];
        const int idx = layout.offsets[static_cast<std::size_t>(in.block)] + local;
        sink_s(idx, in.i == in.j ? coef : coef / kSqrt2);
    };
    for (int r = 0; r < m0; ++r) {
        const auto& con = p.constraints()[static_cast<std::size_t>(r)];
        d.b(r) = con.rhs;
        for (const auto& t : con.terms)
            place(t.var, t.coef, [&](int i, double v) { d.As(r, i) += v; }, [&](int i, double v) { d.Af(r, i) += v; });
    }
    for (const auto& t : p.objective())
        place(t.var, -t.coef, [&](int i, double v) { d.cs(i) += v; }, [&](int i, double v) { d.cf(i) += v; });
    return d;
}

// Result of eliminating free variables and dependent rows.
struct Reduced {
    Eigen::MatrixXd A;  // k × s, orthonormal rows
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double c_const = 0;
    Eigen::MatrixXd lambda_map;  // m0 × k, original multipliers from reduced ones
    Eigen::MatrixXd free_pinv;   // nf × m0
    bool inconsistent = false;
    Eigen::VectorXd ray;  // original-space Farkas vector when inconsistent
    bool unbounded = false;
};

// Numerical rank against an absolute scale, so an all-roundoff matrix has rank 0.
Eigen::Index rank_of(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr, double tol, double scale) {
    const Eigen::Index n = std::min(qr.matrixQR().rows(), qr.matrixQR().cols());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(qr.matrixQR()(i, i)) > tol * scale) ++r;
    return r;
}

Reduced reduce(const Dense& d, double rank_tol) {
    Reduced r;
    const Eigen::Index m0 = d.As.rows();
    const Eigen::Index s = d.As.cols();
    const Eigen::Index nf = d.Af.cols();

    Eigen::MatrixXd B;
    Eigen::VectorXd cb;
    Eigen::MatrixXd Q2;  // m0 × m1
    r.c = d.cs;
    if (nf > 0 && m0 > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.Af);
        const Eigen::Index rk = rank_of(qr, rank_tol, std::max(1.0, d.Af.cwiseAbs().maxCoeff()));
        Eigen::MatrixXd QtAs = d.As;
        QtAs.applyOnTheLeft(qr.householderQ().adjoint());
        Eigen::VectorXd Qtb = d.b;
        Qtb.applyOnTheLeft(qr.householderQ().adjoint());
        B = QtAs.bottomRows(m0 - rk);
        cb = Qtb.tail(m0 - rk);
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m0, m0 - rk);
        E.bottomRows(m0 - rk).setIdentity();
        E.applyOnTheLeft(qr.householderQ());
        Q2 = E;

        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(d.Af);
        cod.setThreshold(rank_tol);
        r.free_pinv = cod.pseudoInverse();
        // Costs on free variables must vanish on ker(A_f), else the problem is unbounded.
        if (d.cf.norm() > 0) {
            Eigen::VectorXd proj = d.cf - d.Af.transpose() * (r.free_pinv.transpose() * d.cf);
            if (proj.norm() > 1e-9 * (1 + d.cf.norm())) r.unbounded = true;
            Eigen::VectorXd g = r.free_pinv.transpose() * d.cf;
            r.c -= d.As.transpose() * g;
            r.c_const = g.dot(d.b);
        }
    } else {
        B = d.As;
        cb = d.b;
        Q2 = Eigen::MatrixXd::Identity(m0, m0);
        r.free_pinv = Eigen::MatrixXd::Zero(nf, m0);
        if (nf > 0 && d.cf.norm() > 0) r.unbounded = true;
    }

    const Eigen::Index m1 = B.rows();
    if (m1 == 0) {
        r.A.resize(0, s);
        r.b.resize(0);
        r.lambda_map.resize(m0, 0);
        return r;
    }
    Eigen::MatrixXd Bt = B.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr2(Bt);
    const Eigen::Index k = rank_of(qr2, rank_tol, std::max(1.0, d.As.size() ? d.As.cwiseAbs().maxCoeff() : 0.0));
    const Eigen::MatrixXd& QR = qr2.matrixQR();
    Eigen::MatrixXd R11 = QR.topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd R12 = QR.topRightCorner(k, m1 - k);
    Eigen::VectorXd Pc = qr2.colsPermutation().transpose() * cb;
    Eigen::VectorXd z = R11.transpose().triangularView<Eigen::Lower>().solve(Pc.head(k));
    Eigen::VectorXd resid = Pc.tail(m1 - k) - R12.transpose() * z;
    if (resid.size() > 0) {
        Eigen::Index j = 0;
        double worst = resid.cwiseAbs().maxCoeff(&j);
        if (worst > 1e-9 * (1 + cb.cwiseAbs().maxCoeff())) {
            r.inconsistent = true;
            Eigen::VectorXd u = Eigen::VectorXd::Zero(m1);
            Eigen::VectorXd head = -R11.triangularView<Eigen::Upper>().solve(R12.col(j));
            u.head(k) = head;
            u(k + j) = 1.0;
            Eigen::VectorXd ub = qr2.colsPermutation() * u;
            r.ray = Q2 * ub * (resid(j) > 0 ? 1.0 : -1.0);
            return r;
        }
    }
    Eigen::MatrixXd Q1 = Eigen::MatrixXd::Zero(s, k);
    Q1.topRows(k).setIdentity();
    Q1.applyOnTheLeft(qr2.householderQ());
    r.A = Q1.transpose();
    r.b = z;
    Eigen::MatrixXd Ek = Eigen::MatrixXd::Zero(m1, k);
    Ek.topRows(k) = R11.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    r.lambda_map = Q2 * (qr2.colsPermutation() * Ek);
    return r;
}

// Per-block Nesterov-Todd scaling: W = R Rᵀ with R⁻¹XR⁻ᵀ = RᵀSR = diag(λ).
struct Scaling {
    std::vector<Eigen::MatrixXd> R, Rinv, W;
    std::vector<Eigen::VectorXd> lambda;
};

bool nt_scaling(const Eigen::VectorXd& x, const Eigen::VectorXd& s, const ConeLayout& L, Scaling& sc) {
    const std::size_t nb = L.sizes.size();
    sc.R.resize(nb);
    sc.Rinv.resize(nb);
    sc.W.resize(nb);
    sc.lambda.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const int n = L.sizes[b];
        const int dim = n * (n + 1) / 2;
        if (n == 1) {
            double xv = x(L.offsets[b]), sv = s(L.offsets[b]);
            if (!(xv > 0 && sv > 0)) return false;
            double l = std::sqrt(xv * sv);
            double rr = std::sqrt(std::sqrt(xv / sv));
            sc.R[b] = Eigen::MatrixXd::Constant(1, 1, rr);
            sc.Rinv[b] = Eigen::MatrixXd::Constant(1, 1, 1.0 / rr);
            sc.W[b] = Eigen::MatrixXd::Constant(1, 1, rr * rr);
            sc.lambda[b] = Eigen::VectorXd::Constant(1, l);
            continue;
        }
        Eigen::MatrixXd X = smat(x.segment(L.offsets[b], dim), n);
        Eigen::MatrixXd S = smat(s.segment(L.offsets[b], dim), n);
        Eigen::LLT<Eigen::MatrixXd> lx(X), ls(S);
        if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
        Eigen::MatrixXd Lx = lx.matrixL(), Ls = ls.matrixL();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ls.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::VectorXd sig = svd.singularValues();
        if (sig.minCoeff() <= 0) return false;
        Eigen::VectorXd isq = sig.cwiseSqrt().cwiseInverse();
        sc.R[b] = Lx * svd.matrixV() * isq.asDiagonal();
        sc.Rinv[b] = isq.asDiagonal() * svd.matrixU().transpose() * Ls.transpose();
        sc.W[b] = sc.R[b] * sc.R[b].transpose();
        sc.lambda[b] = sig;
    }
    return true;
}

// W·v·W blockwise in svec form.
Eigen::VectorXd apply_w(const Scaling& sc, const ConeLayout& L, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(v.size());
    for (std::size_t b = 0; b < L.sizes.size(); ++b) {
        const int n = L.sizes[b];
        const int dim = n * (n + 1) / 2;
        if (n == 1) {
            out(L.offsets[b]) = sc.W[b](0, 0) * sc.W[b](0, 0) * v(L.offsets[b]);
            continue;
        }
        out.segment(L.offsets[b], dim) = svec(sc.W[b] * smat(v.segment(L.offsets[b], dim), n) * sc.W[b]);
    }
    return out;
}

// Largest step α ≤ 1/γ keeping diag(λ) + α·D ⪰ 0 in every block (scaled space).
double max_step(const Scaling& sc, const std::vector<Eigen::MatrixXd>& D) {
    double amax = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < D.size(); ++b) {
        Eigen::VectorXd il = sc.lambda[b].cwiseSqrt().cwiseInverse();
        Eigen::MatrixXd T = il.asDiagonal() * D[b] * il.asDiagonal();
        double mn;
        if (T.rows() == 1) {
            mn = T(0, 0);
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
            mn = es.eigenvalues()(0);
        }
        if (mn < 0) amax = std::min(amax, -1.0 / mn);
    }
    return amax;
}

struct Direction {
    Eigen::VectorXd dx, ds, dy;
    double dtau = 0, dkappa = 0;
    std::vector<Eigen::MatrixXd> dx_s, ds_s;  // scaled-space blocks
};

struct Iterate {
    Eigen::VectorXd x, s, y;
    double tau = 1, kappa = 1;
};

class Hsd {
public:
    Hsd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c, const ConeLayout& L,
        const SolverOptions& o)
        : A_(A), b_(b), c_(c), L_(L), opts_(o) {}

    enum class Outcome { Optimal, PrimalInfeasible, DualInfeasible, Stalled, MaxIter };

    Outcome run(Iterate& it, int& iters, double& pres, double& dres, double& gap) {
        const int s = L_.dim;
        it.x = Eigen::VectorXd::Zero(s);
        it.s = Eigen::VectorXd::Zero(s);
        for (std::size_t b = 0; b < L_.sizes.size(); ++b) {
            const int n = L_.sizes[b];
            it.x.segment(L_.offsets[b], n * (n + 1) / 2) = svec(Eigen::MatrixXd::Identity(n, n));
            it.s.segment(L_.offsets[b], n * (n + 1) / 2) = svec(Eigen::MatrixXd::Identity(n, n));
        }
        it.y = Eigen::VectorXd::Zero(A_.rows());
        it.tau = it.kappa = 1;
        const double nu = L_.rank + 1.0;
        const double bnorm = 1 + b_.norm(), cnorm = 1 + c_.norm();
        int stall = 0;
        Iterate best = it;
        double best_merit = std::numeric_limits<double>::infinity();

        for (iters = 0; iters < opts_.max_iterations; ++iters) {
            Eigen::VectorXd rp = b_ * it.tau - A_ * it.x;
            Eigen::VectorXd rd = c_ * it.tau - A_.transpose() * it.y - it.s;
            double rg = it.kappa + c_.dot(it.x) - b_.dot(it.y);
            double mu = (it.x.dot(it.s) + it.tau * it.kappa) / nu;

            pres = rp.norm() / it.tau / bnorm;
            dres = rd.norm() / it.tau / cnorm;
            double pobj = c_.dot(it.x) / it.tau, dobj = b_.dot(it.y) / it.tau;
            gap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
            if (opts_.verbose)
                std::fprintf(stderr, "%3d pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e mu %.2e\n", iters, pres,
                             dres, gap, it.tau, it.kappa, mu);
            double merit = std::max({pres, dres, gap});
            if (merit < best_merit) {
                best_merit = merit;
                best = it;
            }
            if (pres <= opts_.feas_tol && dres <= opts_.feas_tol && gap <= opts_.gap_tol) return Outcome::Optimal;

            double by = b_.dot(it.y), cx = c_.dot(it.x);
            if (by > 0) {
                double pinf = (A_.transpose() * it.y + it.s).norm() / by;
                if (pinf < opts_.feas_tol * 10 && it.tau < 1e-6 * it.kappa) return Outcome::PrimalInfeasible;
            }
            if (cx < 0) {
                double dinf = (A_ * it.x).norm() / -cx;
                if (dinf < opts_.feas_tol * 10 && it.tau < 1e-6 * it.kappa) return Outcome::DualInfeasible;
            }

            Scaling sc;
            if (!nt_scaling(it.x, it.s, L_, sc)) break;
            Eigen::MatrixXd M = opts_.parallel ? schur_complement(A_, sc.W, L_) : schur_complement_serial(A_, sc.W, L_);
            Eigen::LLT<Eigen::MatrixXd> chol;
            double reg = 0;
            for (int attempt = 0; attempt < 6; ++attempt) {
                Eigen::MatrixXd Mr = M;
                if (reg > 0) Mr.diagonal().array() += reg * (1 + M.diagonal().cwiseAbs().maxCoeff());
                chol.compute(Mr);
                if (chol.info() == Eigen::Success) break;
                reg = reg == 0 ? 1e-14 : reg * 100;
            }
            if (chol.info() != Eigen::Success) break;

            Eigen::VectorXd WcW = apply_w(sc, L_, c_);
            Eigen::VectorXd a = A_ * WcW;
            Eigen::VectorXd v = chol.solve(b_ + a);
            double cWc = c_.dot(WcW);
            Eigen::VectorXd Wrd = apply_w(sc, L_, rd);
            double WcW_rd = WcW.dot(rd);

            auto solve_dir = [&](double eta, const std::vector<Eigen::MatrixXd>& rc, double rtau) {
                Direction d;
                Eigen::VectorXd G(s);
                for (std::size_t b = 0; b < L_.sizes.size(); ++b) {
                    const int n = L_.sizes[b];
                    const auto& lam = sc.lambda[b];
                    Eigen::MatrixXd E(n, n);
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) E(i, j) = 2.0 * rc[b](i, j) / (lam(i) + lam(j));
                    G.segment(L_.offsets[b], n * (n + 1) / 2) = svec(sc.R[b] * E * sc.R[b].transpose());
                }
                Eigen::VectorXd h1 = eta * rp - A_ * G + eta * (A_ * Wrd);
                Eigen::VectorXd u = chol.solve(h1);
                double rhs = eta * rg + c_.dot(G) - eta * WcW_rd + rtau / it.tau - (b_ - a).dot(u);
                double den = (b_ - a).dot(v) + cWc + it.kappa / it.tau;
                d.dtau = rhs / den;
                d.dy = u + v * d.dtau;
                d.ds = eta * rd + c_ * d.dtau - A_.transpose() * d.dy;
                d.dx = G - apply_w(sc, L_, d.ds);
                d.dkappa = (rtau - it.kappa * d.dtau) / it.tau;
                d.dx_s.resize(L_.sizes.size());
                d.ds_s.resize(L_.sizes.size());
                for (std::size_t b = 0; b < L_.sizes.size(); ++b) {
                    const int n = L_.sizes[b];
                    const int dim = n * (n + 1) / 2;
                    Eigen::MatrixXd DX = smat(d.dx.segment(L_.offsets[b], dim), n);
                    Eigen::MatrixXd DS = smat(d.ds.segment(L_.offsets[b], dim), n);
                    d.dx_s[b] = sc.Rinv[b] * DX * sc.Rinv[b].transpose();
                    d.ds_s[b] = sc.R[b].transpose() * DS * sc.R[b];
                }
                return d;
            };
            auto step_len = [&](const Direction& d) {
                double a1 = max_step(sc, d.dx_s);
                double a2 = max_step(sc, d.ds_s);
                double a = std::min(a1, a2);
                if (d.dtau < 0) a = std::min(a, -it.tau / d.dtau);
                if (d.dkappa < 0) a = std::min(a, -it.kappa / d.dkappa);
                return a;
            };

            // Predictor.
            std::vector<Eigen::MatrixXd> rc(L_.sizes.size());
            for (std::size_t b = 0; b < L_.sizes.size(); ++b) {
                Eigen::VectorXd l2 = sc.lambda[b].array().square();
                rc[b] = Eigen::MatrixXd(l2.asDiagonal()) * -1.0;
            }
            Direction aff = solve_dir(1.0, rc, -it.tau * it.kappa);
            double a_aff = std::min(1.0, step_len(aff));
            double mu_aff = ((it.x + a_aff * aff.dx).dot(it.s + a_aff * aff.ds) +
                             (it.tau + a_aff * aff.dtau) * (it.kappa + a_aff * aff.dkappa)) /
                            nu;
            double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
            sigma = std::min(1.0, std::max(0.0, sigma));

            // Corrector.
            for (std::size_t b = 0; b < L_.sizes.size(); ++b) {
                const int n = L_.sizes[b];
                Eigen::MatrixXd corr = 0.5 * (aff.dx_s[b] * aff.ds_s[b] + aff.ds_s[b] * aff.dx_s[b]);
                rc[b] = sigma * mu * Eigen::MatrixXd::Identity(n, n) - corr;
                rc[b].diagonal() -= sc.lambda[b].array().square().matrix();
            }
            Direction dir = solve_dir(1.0 - sigma, rc, sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa);
            double alpha = std::min(1.0, 0.98 * step_len(dir));
            if (!(alpha > 0) || !std::isfinite(alpha)) break;

            it.x += alpha * dir.dx;
            it.s += alpha * dir.ds;
            it.y += alpha * dir.dy;
            it.tau += alpha * dir.dtau;
            it.kappa += alpha * dir.dkappa;
            if (alpha < 1e-8) {
                if (++stall >= 5) break;
            } else {
                stall = 0;
            }
        }
        // Report the best iterate seen.
        it = best;
        Eigen::VectorXd rp = b_ * it.tau - A_ * it.x;
        Eigen::VectorXd rd = c_ * it.tau - A_.transpose() * it.y - it.s;
        pres = rp.norm() / it.tau / bnorm;
        dres = rd.norm() / it.tau / cnorm;
        double pobj = c_.dot(it.x) / it.tau, dobj = b_.dot(it.y) / it.tau;
        gap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
        return iters >= opts_.max_iterations ? Outcome::MaxIter : Outcome::Stalled;
    }

private:
    const Eigen::MatrixXd& A_;
    const Eigen::VectorXd& b_;
    const Eigen::VectorXd& c_;
    const ConeLayout& L_;
    SolverOptions opts_;
};

double max_equality_residual(const SdpProblem& p, const std::vector<double>& vals) {
    double worst = 0;
    for (const auto& con : p.constraints()) {
        double s = -con.rhs;
        for (const auto& t : con.terms) s += t.coef * vals[static_cast<std::size_t>(t.var)];
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolverOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    SdpSolution sol;
    auto finish = [&]() {
        sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    };
    if (problem.num_vars() == 0) {
        sol.message = "empty problem";
        return finish();
    }
    ConeLayout layout(problem.block_sizes());
    Dense d = densify(problem, layout);
    Reduced red = reduce(d, 1e-10);
    const auto nb = static_cast<std::size_t>(problem.num_blocks());

    if (red.inconsistent) {
        sol.status = Status::Infeasible;
        sol.message = "equality constraints are inconsistent";
        sol.dual_ray.assign(red.ray.data(), red.ray.data() + red.ray.size());
        return finish();
    }
    if (red.unbounded) {
        sol.message = "objective unbounded along free variables";
        return finish();
    }

    // Scale data to unit size for the iteration.
    const double bs = std::max(1.0, red.b.size() ? red.b.cwiseAbs().maxCoeff() : 0.0);
    const double cs = std::max(1.0, red.c.size() ? red.c.cwiseAbs().maxCoeff() : 0.0);
    Eigen::VectorXd b = red.b / bs, c = red.c / cs;
    Hsd hsd(red.A, b, c, layout, opts);
    Iterate it;
    double pres = 0, dres = 0, gap = 0;
    Hsd::Outcome out = hsd.run(it, sol.iterations, pres, dres, gap);
    sol.dual_residual = dres;

    Eigen::VectorXd x = it.x / it.tau * bs;
    Eigen::VectorXd y = it.y / it.tau * cs;
    sol.blocks.resize(nb);
    sol.min_eigenvalues.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        const int n = layout.sizes[k];
        sol.blocks[k] = smat(x.segment(layout.offsets[k], n * (n + 1) / 2), n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.blocks[k], Eigen::EigenvaluesOnly);
        sol.min_eigenvalues[k] = es.eigenvalues()(0);
    }
    Eigen::VectorXd yf = red.free_pinv * (d.b - d.As * x);
    sol.free.assign(yf.data(), yf.data() + yf.size());
    sol.objective = -(red.c.dot(x) + red.c_const);
    sol.dual_objective = -(red.b.dot(y) + red.c_const);
    auto vals = sol.values(problem);
    sol.equality_residual = max_equality_residual(problem, vals);

    const double rhs_norm = d.b.size() ? d.b.cwiseAbs().maxCoeff() : 0.0;
    auto within_band = [&]() {
        if (sol.equality_residual > 1e-7 * (1 + rhs_norm)) return false;
        for (std::size_t k = 0; k < nb; ++k)
            if (sol.min_eigenvalues[k] < -1e-8 * (1 + sol.blocks[k].norm())) return false;
        return true;
    };

    switch (out) {
        case Hsd::Outcome::Optimal:
            if (within_band()) {
                sol.status = Status::Feasible;
                sol.message = "optimal";
            } else {
                sol.message = "converged but residual outside tolerance";
            }
            break;
        case Hsd::Outcome::PrimalInfeasible: {
            Eigen::VectorXd lam = red.lambda_map * it.y;
            sol.dual_ray.assign(lam.data(), lam.data() + lam.size());
            auto chk = check_infeasibility_ray(problem, sol.dual_ray);
            if (chk.valid) {
                sol.status = Status::Infeasible;
                sol.message = "primal infeasible";
            } else {
                sol.message = "infeasibility ray failed verification";
            }
            break;
        }
        case Hsd::Outcome::DualInfeasible: sol.message = "dual infeasible (unbounded objective)"; break;
        case Hsd::Outcome::Stalled:
        case Hsd::Outcome::MaxIter:
            if (pres < 1e-6 && dres < 1e-5 && gap < 1e-5 && within_band()) {
                sol.status = Status::Feasible;
                sol.inaccurate = true;
                sol.message = "stalled near optimum";
            } else {
                sol.message = out == Hsd::Outcome::MaxIter ? "iteration limit" : "stalled";
            }
            break;
    }
    return finish();
}

RayCheck check_infeasibility_ray(const SdpProblem& problem, const std::vector<double>& lambda, double tol) {
    RayCheck rc;
    if (lambda.size() != problem.constraints().size()) return rc;
    ConeLayout layout(problem.block_sizes());
    Dense d = densify(problem, layout);
    Eigen::Map<const Eigen::VectorXd> lam(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
    double bl = d.b.dot(lam);
    if (!(bl > 0)) return rc;
    Eigen::VectorXd l = lam / bl;
    rc.b_dot = d.b.dot(l);
    rc.free_residual = d.Af.cols() ? (d.Af.transpose() * l).cwiseAbs().maxCoeff() : 0.0;
    Eigen::VectorXd z = -(d.As.transpose() * l);
    rc.min_eig = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < layout.sizes.size(); ++k) {
        const int n = layout.sizes[k];
        Eigen::MatrixXd Z = smat(z.segment(layout.offsets[k], n * (n + 1) / 2), n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Z, Eigen::EigenvaluesOnly);
        rc.min_eig = std::min(rc.min_eig, es.eigenvalues()(0));
    }
    if (layout.sizes.empty()) rc.min_eig = 0;
    rc.valid = rc.free_residual <= tol && rc.min_eig >= -tol;
    return rc;
}

}  // namespace delaycert::sdp
