#include "delaycert/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "delaycert/quadrature.hpp"

namespace delaycert::simulate {

using poly::DMatrix;
using poly::DPoly;

namespace {

/// Polynomial flattened onto numbered slots for repeated evaluation.
struct CompiledPoly {
    struct Term {
        double c = 0;
        std::vector<std::pair<int, int>> factors;  // (slot, exponent)
    };
    std::vector<Term> terms;

    double operator()(const double* slots) const {
        double s = 0;
        for (const auto& t : terms) {
            double v = t.c;
            for (auto [k, e] : t.factors) {
                const double x = slots[k];
                switch (e) {
                    case 1: v *= x; break;
                    case 2: v *= x * x; break;
                    case 3: v *= x * x * x; break;
                    default: v *= std::pow(x, e);
                }
            }
            s += v;
        }
        return s;
    }
};

CompiledPoly compile(const DPoly& p, const std::map<int, int>& slot_of) {
    CompiledPoly out;
    for (const auto& [m, c] : p.terms()) {
        CompiledPoly::Term t;
        t.c = c;
        for (auto [v, e] : m.terms()) {
            auto it = slot_of.find(v);
            if (it == slot_of.end()) throw std::invalid_argument("unexpected symbol " + poly::var_name(v));
            t.factors.emplace_back(it->second, e);
        }
        out.terms.push_back(std::move(t));
    }
    return out;
}

Eigen::MatrixXd constant_of(const poly::RMatrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const auto& p = m(i, j);
            if (p.degree() > 0) throw std::invalid_argument("system matrix still depends on a parameter");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                poly::to_double(p.coefficient(poly::Monomial()));
        }
    return out;
}

/// Right-hand side x'(t) = F(t, x(t), lookup) for every system kind.
class Rhs {
public:
    Rhs(const SystemSpec& spec, double h) : spec_(spec), n_(spec.n) {
        if (!spec.params.empty()) throw std::invalid_argument("fix the parameters before simulating");
        switch (spec.kind) {
            case SystemKind::LinearSingle:
            case SystemKind::LinearMultiple:
                for (const auto& a : spec.A) A_.push_back(constant_of(a));
                break;
            case SystemKind::LinearDistributed: {
                A_.push_back(constant_of(spec.A[0]));
                const double tau = spec.delays[0];
                const int cells = std::max(1, static_cast<int>(std::ceil(tau / h - 1e-9)));
                const int th = poly::var("theta");
                for (int c = 0; c < cells; ++c) {
                    auto q = gauss_legendre(3, -tau + c * tau / cells, -tau + (c + 1) * tau / cells);
                    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
                        nodes_.push_back(q.nodes[k]);
                        Eigen::MatrixXd K(n_, n_);
                        for (int i = 0; i < n_; ++i)
                            for (int j = 0; j < n_; ++j)
                                K(i, j) = poly::evaluate(
                                    spec.kernel(static_cast<std::size_t>(i), static_cast<std::size_t>(j)),
                                    {{th, q.nodes[k]}});
                        kernel_.push_back(q.weights[k] * K);
                    }
                }
                break;
            }
            case SystemKind::NonlinearDelay:
            case SystemKind::Ode: {
                std::map<int, int> slots;
                for (int k = 0; k <= spec.num_delays(); ++k)
                    for (int c = 0; c < n_; ++c) slots[state_var(k, c)] = k * n_ + c;
                for (const auto& fi : spec.f) f_.push_back(compile(poly::to_double(fi), slots));
                buf_.resize(static_cast<std::size_t>((spec.num_delays() + 1) * n_));
                break;
            }
        }
    }

    template <class Lookup>
    Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x, const Lookup& lookup) {
        switch (spec_.kind) {
            case SystemKind::LinearSingle:
            case SystemKind::LinearMultiple: {
                Eigen::VectorXd r = A_[0] * x;
                for (int k = 1; k <= spec_.num_delays(); ++k)
                    r += A_[static_cast<std::size_t>(k)] * lookup(t - spec_.delays[static_cast<std::size_t>(k) - 1]);
                return r;
            }
            case SystemKind::LinearDistributed: {
                Eigen::VectorXd r = A_[0] * x;
                for (std::size_t q = 0; q < nodes_.size(); ++q) r += kernel_[q] * lookup(t + nodes_[q]);
                return r;
            }
            case SystemKind::NonlinearDelay:
            case SystemKind::Ode: {
                for (int c = 0; c < n_; ++c) buf_[static_cast<std::size_t>(c)] = x(c);
                for (int k = 1; k <= spec_.num_delays(); ++k) {
                    Eigen::VectorXd xd = lookup(t - spec_.delays[static_cast<std::size_t>(k) - 1]);
                    for (int c = 0; c < n_; ++c) buf_[static_cast<std::size_t>(k * n_ + c)] = xd(c);
                }
                Eigen::VectorXd r(n_);
                for (int c = 0; c < n_; ++c) r(c) = f_[static_cast<std::size_t>(c)](buf_.data());
                return r;
            }
        }
        return x;
    }

private:
    const SystemSpec& spec_;
    int n_;
    std::vector<Eigen::MatrixXd> A_;
    std::vector<double> nodes_;
    std::vector<Eigen::MatrixXd> kernel_;
    std::vector<CompiledPoly> f_;
    std::vector<double> buf_;
};

Eigen::VectorXd hermite(const Trajectory& tr, std::size_t k, double s) {
    const double u = (s - tr.t[k]) / tr.h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * tr.x[k] + (u3 - 2 * u2 + u) * tr.h * tr.dx[k] + (-2 * u3 + 3 * u2) * tr.x[k + 1] +
           (u3 - u2) * tr.h * tr.dx[k + 1];
}

/// Dense output, extrapolating the last cell (or a tangent) past the newest sample.
Eigen::VectorXd dense(const Trajectory& tr, double s) {
    if (s <= 0) return tr.history(std::max(s, -tr.max_delay));
    const std::size_t last = tr.t.size() - 1;
    if (last == 0) return tr.x[0] + s * tr.dx[0];
    auto k = static_cast<std::size_t>(std::floor(s / tr.h));
    k = std::min(k, last - 1);
    return hermite(tr, k, s);
}

Trajectory run(const SystemSpec& spec, const History& phi, double t_end, double h, double blow_up) {
    Trajectory tr;
    tr.n = spec.n;
    tr.h = h;
    tr.max_delay = spec.delays.empty() ? 0.0 : spec.delays.back();
    tr.history = phi;
    Rhs rhs(spec, h);
    auto lookup = [&](double s) { return dense(tr, s); };
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
    tr.t.reserve(steps + 1);
    tr.t.push_back(0);
    tr.x.push_back(phi(0));
    tr.dx.push_back(Eigen::VectorXd::Zero(spec.n));
    tr.dx[0] = rhs(0, tr.x[0], lookup);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = tr.t[i];
        const Eigen::VectorXd& x = tr.x[i];
        Eigen::VectorXd k1 = tr.dx[i];
        Eigen::VectorXd k2 = rhs(t + h / 2, x + h / 2 * k1, lookup);
        Eigen::VectorXd k3 = rhs(t + h / 2, x + h / 2 * k2, lookup);
        Eigen::VectorXd k4 = rhs(t + h, x + h * k3, lookup);
        Eigen::VectorXd next = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!next.allFinite() || next.cwiseAbs().maxCoeff() > blow_up) {
            tr.blow_up = true;
            tr.escape_time = t + h;
            break;
        }
        tr.t.push_back(static_cast<double>(i + 1) * h);
        tr.x.push_back(next);
        tr.dx.push_back(Eigen::VectorXd::Zero(spec.n));
        tr.dx.back() = rhs(tr.t.back(), next, lookup);
    }
    return tr;
}

}  // namespace

History constant_history(const Eigen::VectorXd& value) {
    return [value](double) { return value; };
}

History polynomial_history(const std::vector<DPoly>& phi) {
    const int th = poly::var("theta");
    std::vector<CompiledPoly> comp;
    for (const auto& p : phi) comp.push_back(compile(p, {{th, 0}}));
    return [comp](double theta) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(comp.size()));
        for (std::size_t c = 0; c < comp.size(); ++c) v(static_cast<Eigen::Index>(c)) = comp[c](&theta);
        return v;
    };
}

Segment history_segment(const History& phi, double length) {
    Segment s;
    s.length = length;
    s.at = phi;
    s.breaks = {-length, 0.0};
    return s;
}

Eigen::VectorXd Trajectory::at(double s) const {
    if (s < -max_delay - 1e-12 || s > t_end() + 1e-12) throw std::out_of_range("time outside the trajectory");
    if (s <= 0) return history(std::max(s, -max_delay));
    if (t.size() < 2) return x[0];
    return dense(*this, std::min(s, t_end()));
}

Segment Trajectory::segment(double time) const {
    Segment s;
    s.length = max_delay;
    s.at = [this, time](double theta) { return at(time + theta); };
    s.breaks = {-max_delay, 0.0};
    if (time - max_delay < 0 && time > 0) s.breaks.push_back(-time);
    const double lo = std::max(0.0, time - max_delay);
    for (auto k = static_cast<long>(std::ceil(lo / h - 1e-9)); static_cast<double>(k) * h < time - 1e-12; ++k)
        s.breaks.push_back(static_cast<double>(k) * h - time);
    std::sort(s.breaks.begin(), s.breaks.end());
    std::vector<double> clean;
    for (double b : s.breaks)
        if (b >= -max_delay - 1e-15 && b <= 1e-15 && (clean.empty() || b - clean.back() > 1e-12 * (1 + max_delay)))
            clean.push_back(std::clamp(b, -max_delay, 0.0));
    if (clean.back() != 0.0) clean.back() = 0.0;
    s.breaks = clean;
    return s;
}

void Trajectory::write_csv(std::ostream& os) const {
    os << "t";
    for (int c = 0; c < n; ++c) os << ",x" << c + 1;
    os << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << t[i];
        for (int c = 0; c < n; ++c) os << "," << x[i](c);
        os << "\n";
    }
}

double default_step(const SystemSpec& spec) { return spec.delays.empty() ? 0.01 : spec.delays.front() / 50; }

Trajectory integrate(const SystemSpec& spec, const History& phi, double t_end, double h,
                     const IntegrateOptions& opts) {
    spec.validate();
    if (!(h > 0) || !(t_end > 0)) throw std::invalid_argument("step and horizon must be positive");
    if (!spec.delays.empty() && h > spec.delays.front() * (1 + 1e-12))
        throw std::invalid_argument("step exceeds the smallest delay");
    if (phi(0).size() != spec.n) throw std::invalid_argument("history dimension mismatch");
    Trajectory tr = run(spec, phi, t_end, h, opts.blow_up);
    if (opts.error_estimate && !tr.blow_up &&
        (spec.delays.empty() || 2 * h <= spec.delays.front() * (1 + 1e-12)) && tr.t.size() >= 3) {
        const std::size_t even = (tr.t.size() - 1) / 2 * 2;
        Trajectory coarse = run(spec, phi, tr.t[even], 2 * h, opts.blow_up);
        if (!coarse.blow_up)
            tr.error_estimate = (tr.x[even] - coarse.x.back()).cwiseAbs().maxCoeff() / 15;
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Functional evaluation

namespace {

struct Rule {
    std::vector<double> nodes, weights;
};

/// Composite Gauss-Legendre on [a, b] split at the segment's breaks.
Rule cells_rule(const Segment& seg, double a, double b, int exact_order) {
    std::vector<double> cuts{a};
    for (double x : seg.breaks)
        if (x > a + 1e-14 && x < b - 1e-14) cuts.push_back(x);
    cuts.push_back(b);
    const int cells = static_cast<int>(cuts.size()) - 1;
    // Past a handful of cells the segment is a spline; 6 nodes per cell is already exact to roundoff.
    const int m = std::max(1, cells <= 4 ? exact_order : std::min(exact_order, 6));
    Rule r;
    for (int c = 0; c < cells; ++c) {
        if (cuts[static_cast<std::size_t>(c) + 1] <= cuts[static_cast<std::size_t>(c)]) continue;
        auto q = gauss_legendre(m, cuts[static_cast<std::size_t>(c)], cuts[static_cast<std::size_t>(c) + 1]);
        r.nodes.insert(r.nodes.end(), q.nodes.begin(), q.nodes.end());
        r.weights.insert(r.weights.end(), q.weights.begin(), q.weights.end());
    }
    return r;
}

/// Matrix polynomial in (theta, omega) as coefficient matrices keyed by exponents.
std::map<std::pair<int, int>, Eigen::MatrixXd> coefficients(const DMatrix& m, int th, int om) {
    std::map<std::pair<int, int>, Eigen::MatrixXd> out;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            for (const auto& [mono, c] : m(i, j).terms()) {
                auto key = std::make_pair(mono.exponent(th), mono.exponent(om));
                auto it = out.find(key);
                if (it == out.end())
                    it = out.emplace(key, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows()),
                                                                static_cast<Eigen::Index>(m.cols())))
                             .first;
                it->second(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += c;
            }
    return out;
}

Eigen::MatrixXd eval_theta(const std::map<std::pair<int, int>, Eigen::MatrixXd>& coef, double theta, Eigen::Index r,
                           Eigen::Index c) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r, c);
    for (const auto& [e, m] : coef) out += std::pow(theta, e.first) * m;
    return out;
}

std::vector<double> piece_bounds(const stability::Certificate& cert) {
    std::vector<double> b{0.0};
    for (double t : cert.delays) b.push_back(t);
    return b;
}

int max_theta_degree(const DMatrix& m, int th) { return m.degree_in(th); }

double linear_value(const stability::Certificate& c, const Segment& seg) {
    const int th = poly::var("theta"), om = poly::var("omega");
    const Eigen::VectorXd x0 = seg.at(0);
    double v = x0.dot(c.P * x0);
    const auto b = piece_bounds(c);
    const auto K = c.Q.size();
    const Eigen::Index n = x0.size();
    int rdeg = 0;
    for (const auto& row : c.R)
        for (const auto& r : row) rdeg = std::max({rdeg, r.degree_in(th), r.degree_in(om)});
    std::vector<std::vector<Eigen::VectorXd>> mu(K);
    for (std::size_t i = 0; i < K; ++i) {
        const int deg = std::max({max_theta_degree(c.Q[i], th), max_theta_degree(c.S[i], th), rdeg});
        Rule q = cells_rule(seg, -b[i + 1], -b[i], (deg + 6) / 2 + 1);
        auto Qc = coefficients(c.Q[i], th, om), Sc = coefficients(c.S[i], th, om);
        mu[i].assign(static_cast<std::size_t>(rdeg) + 1, Eigen::VectorXd::Zero(n));
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            const double t = q.nodes[k], w = q.weights[k];
            const Eigen::VectorXd phi = seg.at(t);
            v += w * (2 * x0.dot(eval_theta(Qc, t, n, n) * phi) + phi.dot(eval_theta(Sc, t, n, n) * phi));
            double p = 1;
            for (int a = 0; a <= rdeg; ++a, p *= t) mu[i][static_cast<std::size_t>(a)] += w * p * phi;
        }
    }
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            for (const auto& [e, m] : coefficients(c.R[i][j], th, om))
                v += mu[i][static_cast<std::size_t>(e.first)].dot(m * mu[j][static_cast<std::size_t>(e.second)]);
    return v;
}

/// 3 * (state degree) + theta degree: the per-cell degree of p(phi(theta), theta) for cubic phi.
int cell_degree(const DPoly& p, const std::vector<int>& states, int th) {
    int d = 0;
    for (const auto& [m, c] : p.terms()) {
        int s = 0;
        for (int v : states) s += m.exponent(v);
        d = std::max(d, 3 * s + m.exponent(th));
    }
    return d;
}

double nonlinear_value(const stability::Certificate& c, const Segment& seg) {
    const int n = c.n;
    const int th = poly::var("theta"), om = poly::var("omega");
    std::vector<int> x0, ps, pw;
    for (int k = 0; k < n; ++k) {
        x0.push_back(state_var(0, k));
        ps.push_back(stability::theta_state_var(k));
        pw.push_back(stability::omega_state_var(k));
    }
    // slots: x(0) 0..n-1, psi n..2n-1, theta 2n
    std::map<int, int> slots;
    for (int k = 0; k < n; ++k) {
        slots[x0[static_cast<std::size_t>(k)]] = k;
        slots[ps[static_cast<std::size_t>(k)]] = n + k;
    }
    slots[th] = 2 * n;
    const Eigen::VectorXd xv = seg.at(0);
    std::vector<double> buf(static_cast<std::size_t>(2 * n + 1));
    for (int k = 0; k < n; ++k) buf[static_cast<std::size_t>(k)] = xv(k);
    const auto b = piece_bounds(c);
    const auto K = c.g.size();
    double v = 0;
    std::vector<Rule> rules;
    std::vector<std::vector<std::vector<double>>> node_slots(K);  // per piece, per node
    for (std::size_t i = 0; i < K; ++i) {
        int deg = cell_degree(c.g[i], ps, th);
        for (const auto& row : c.h)
            for (const auto& hij : row) deg = std::max({deg, cell_degree(hij, ps, th), cell_degree(hij, pw, om)});
        Rule q = cells_rule(seg, -b[i + 1], -b[i], deg / 2 + 1);
        CompiledPoly g = compile(c.g[i], slots);
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            const Eigen::VectorXd phi = seg.at(q.nodes[k]);
            for (int j = 0; j < n; ++j) buf[static_cast<std::size_t>(n + j)] = phi(j);
            buf[static_cast<std::size_t>(2 * n)] = q.nodes[k];
            v += q.weights[k] * g(buf.data());
            node_slots[i].push_back(buf);
        }
        rules.push_back(std::move(q));
    }
    // Double integrals factor term by term into products of single integrals.
    std::vector<std::map<std::vector<std::pair<int, int>>, double>> cache(K);
    auto factor_integral = [&](std::size_t piece, const std::vector<std::pair<int, int>>& f) {
        auto it = cache[piece].find(f);
        if (it != cache[piece].end()) return it->second;
        double s = 0;
        for (std::size_t k = 0; k < rules[piece].nodes.size(); ++k) {
            double p = rules[piece].weights[k];
            for (auto [slot, e] : f) p *= std::pow(node_slots[piece][k][static_cast<std::size_t>(slot)], e);
            s += p;
        }
        cache[piece].emplace(f, s);
        return s;
    };
    std::map<int, int> first, second;  // symbol -> slot for each factor
    for (int k = 0; k < n; ++k) {
        first[ps[static_cast<std::size_t>(k)]] = n + k;
        second[pw[static_cast<std::size_t>(k)]] = n + k;
    }
    first[th] = 2 * n;
    second[om] = 2 * n;
    for (std::size_t i = 0; i < c.h.size(); ++i)
        for (std::size_t j = 0; j < c.h[i].size(); ++j)
            for (const auto& [m, coef] : c.h[i][j].terms()) {
                std::vector<std::pair<int, int>> f1, f2;
                for (auto [var, e] : m.terms()) {
                    if (auto a = first.find(var); a != first.end()) {
                        f1.emplace_back(a->second, e);
                    } else if (auto bb = second.find(var); bb != second.end()) {
                        f2.emplace_back(bb->second, e);
                    } else {
                        throw std::invalid_argument("unexpected symbol in kernel " + poly::var_name(var));
                    }
                }
                std::sort(f1.begin(), f1.end());
                std::sort(f2.begin(), f2.end());
                v += coef * factor_integral(i, f1) * factor_integral(j, f2);
            }
    return v;
}

double p_value(const stability::Certificate& c, const Segment& seg) {
    const int n = c.n;
    std::map<int, int> slots;
    for (int k = 0; k < n; ++k) slots[state_var(0, k)] = k;
    const Eigen::VectorXd x0 = seg.at(0);
    if (c.p.empty()) return x0.dot(c.P * x0);
    double v = compile(c.p[0], slots)(x0.data());
    const auto b = piece_bounds(c);
    std::vector<int> x0v;
    for (int k = 0; k < n; ++k) x0v.push_back(state_var(0, k));
    for (std::size_t k = 1; k < c.p.size(); ++k) {
        CompiledPoly pk = compile(c.p[k], slots);
        Rule q = cells_rule(seg, -b[k], 0.0, cell_degree(c.p[k], x0v, -1) / 2 + 1);
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
            const Eigen::VectorXd phi = seg.at(q.nodes[i]);
            v += q.weights[i] * pk(phi.data());
        }
    }
    return v;
}

}  // namespace

double functional_value(const stability::Certificate& cert, const Segment& seg) {
    if (seg.at(0).size() != cert.n) throw std::invalid_argument("segment dimension mismatch");
    if (!cert.g.empty()) return nonlinear_value(cert, seg);
    if (!cert.Q.empty()) return linear_value(cert, seg);
    return p_value(cert, seg);
}

DecreaseReport decrease_check(const stability::Certificate& cert, const Trajectory& traj, double tolerance) {
    DecreaseReport rep;
    if (traj.blow_up) return rep;
    const double tau = traj.max_delay;
    if (traj.t_end() < 3 * tau - 1e-12) throw std::invalid_argument("trajectory shorter than three delays");
    const auto steps = traj.t.size() - 1;
    auto first = static_cast<std::size_t>(std::ceil(tau / traj.h - 1e-9)) + 2;
    if (first + 2 > steps) return rep;
    const std::size_t stride = std::max<std::size_t>(1, (steps - 2 - first) / 120);
    auto V = [&](std::size_t i) { return functional_value(cert, traj.segment(traj.t[i])); };
    double vref = 0;
    for (std::size_t i = first; i + 2 <= steps; i += stride) {
        const double vm2 = V(i - 2), vm = V(i - 1), v0 = V(i), vp = V(i + 1), vp2 = V(i + 2);
        if (rep.samples == 0) vref = std::max(std::abs(v0), 1e-300);
        ++rep.samples;
        const double increase = (vp - v0) / vref;
        rep.max_increase = rep.samples == 1 ? increase : std::max(rep.max_increase, increase);
        // Fourth-order centred difference.
        const double deriv = (8 * (vp - vm) - (vp2 - vm2)) / (12 * traj.h);
        const double xn = traj.x[i].squaredNorm();
        const double bound = -0.5 * cert.decay_rate * std::pow(xn, cert.weight_power);
        const double viol = (deriv - bound) / vref;
        rep.worst_violation = rep.samples == 1 ? viol : std::max(rep.worst_violation, viol);
        if (increase > tolerance || viol > tolerance) ++rep.violations;
    }
    rep.passed = rep.samples > 0 && rep.violations == 0;
    return rep;
}

}  // namespace delaycert::simulate
