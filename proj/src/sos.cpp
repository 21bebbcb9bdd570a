#include "delaycert/sos.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delaycert::sos {

using namespace poly;

LinExpr Program::new_free() { return LinExpr::unknown(sdp.add_free().id); }

LMatrix Program::symmetric_unknown(std::size_t n) {
    LMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            m(i, j) = LPoly(new_free());
            m(j, i) = m(i, j);
        }
    return m;
}

LMatrix Program::unknown(std::size_t rows, std::size_t cols) {
    LMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = LPoly(new_free());
    return m;
}

LMatrix Program::unknown_poly(std::size_t rows, std::size_t cols, const MonomialBasis& basis, bool symmetric) {
    LMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = symmetric ? i : 0; j < cols; ++j) {
            LPoly p;
            for (const auto& mono : basis.monomials) p.add(mono, new_free());
            m(i, j) = p;
            if (symmetric) m(j, i) = p;
        }
    return m;
}

namespace {

GramBlock new_gram(Program& prog, const MonomialBasis& basis, int n) {
    GramBlock g;
    g.basis = basis;
    g.n = n;
    g.handle = prog.sdp.add_block(n * static_cast<int>(basis.size()));
    return g;
}

void emit(Program& prog, SosConstraint& c) {
    const std::size_t n = c.target.rows();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t col = r; col < n; ++col) {
            std::map<Monomial, LinExpr, MonomialLess> acc;
            for (const auto& [m, coef] : c.target(r, col).terms()) acc[m] += coef;
            auto subtract = [&](const GramBlock& g, const RPoly& mult) {
                const int N = static_cast<int>(g.basis.size());
                const int ri = static_cast<int>(r), ci = static_cast<int>(col);
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j) {
                        int id = g.handle.id(ri * N + i, ci * N + j);
                        Monomial base = g.basis.monomials[static_cast<std::size_t>(i)] *
                                        g.basis.monomials[static_cast<std::size_t>(j)];
                        for (const auto& [mg, cg] : mult.terms()) acc[base * mg].add_term(id, -cg);
                    }
            };
            subtract(c.gram, RPoly(Rational(1)));
            for (std::size_t k = 0; k < c.multipliers.size(); ++k) subtract(c.multipliers[k], c.region[k]);
            for (const auto& [m, e] : acc) {
                int row = prog.sdp.add_equality(e);
                if (row >= 0) c.rows.push_back(row);
            }
        }
}

void require_square_symmetric(const LMatrix& t) {
    if (t.rows() != t.cols()) throw std::invalid_argument("target must be square");
    if (!t.is_symmetric()) throw std::invalid_argument("target must be symmetric");
}

std::vector<int> matrix_vars(const LMatrix& t) {
    std::vector<int> vs;
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) {
            auto v = t(i, j).variables();
            vs.insert(vs.end(), v.begin(), v.end());
        }
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return vs;
}

int ceil_half(int d) { return d <= 0 ? 0 : (d + 1) / 2; }

}  // namespace

SosConstraint sos(Program& prog, const LPoly& target, std::optional<int> basis_degree, std::string label) {
    int deg = std::max(0, target.degree());
    if (deg % 2 != 0) throw std::invalid_argument("sos: odd-degree target");
    LMatrix t(1, 1);
    t(0, 0) = target;
    SosConstraint c;
    c.label = std::move(label);
    c.target = t;
    c.gram = new_gram(prog, monomial_basis(target.variables(), basis_degree.value_or(deg / 2)), 1);
    emit(prog, c);
    prog.constraints.push_back(c);
    return c;
}

SosConstraint sos_with_bases(Program& prog, const LMatrix& target, const std::vector<RPoly>& region,
                             const std::vector<MonomialBasis>& bases, std::string label) {
    require_square_symmetric(target);
    if (bases.size() != region.size() + 1) throw std::invalid_argument("one basis per multiplier required");
    const int n = static_cast<int>(target.rows());
    SosConstraint c;
    c.label = std::move(label);
    c.target = target;
    c.gram = new_gram(prog, bases[0], n);
    for (std::size_t k = 0; k < region.size(); ++k) {
        if (bases[k + 1].size() == 0) continue;
        c.multipliers.push_back(new_gram(prog, bases[k + 1], n));
        c.region.push_back(region[k]);
    }
    emit(prog, c);
    prog.constraints.push_back(c);
    return c;
}

SosConstraint matrix_sos(Program& prog, const LMatrix& target, std::optional<int> basis_degree, std::string label) {
    require_square_symmetric(target);
    SosConstraint c;
    c.label = std::move(label);
    c.target = target;
    int d = basis_degree.value_or(ceil_half(target.degree()));
    c.gram = new_gram(prog, monomial_basis(matrix_vars(target), d), static_cast<int>(target.rows()));
    emit(prog, c);
    prog.constraints.push_back(c);
    return c;
}

SosConstraint interval_positivity(Program& prog, const LMatrix& target, int v, const RPoly& a, const RPoly& b,
                                  const IntervalOptions& opts) {
    require_square_symmetric(target);
    SosConstraint c;
    c.label = opts.label;
    c.target = target;
    const int n = static_cast<int>(target.rows());
    const int dv = target.degree_in(v);
    const int d0 = ceil_half(dv);

    MonomialBasis extra;
    if (opts.extra) {
        extra = *opts.extra;
    } else {
        std::vector<int> others;
        for (int w : matrix_vars(target))
            if (w != v) others.push_back(w);
        // Degree in the other variables, ignoring v.
        int dy = 0;
        for (std::size_t i = 0; i < target.rows(); ++i)
            for (std::size_t j = 0; j < target.cols(); ++j)
                for (const auto& [m, coef] : target(i, j).terms()) dy = std::max(dy, m.degree() - m.exponent(v));
        extra = monomial_basis(others, ceil_half(dy));
    }
    c.gram = new_gram(prog, product_basis(monomial_basis({v}, d0), extra), n);
    if (d0 >= 1) {
        RPoly x = RPoly::variable(v);
        RPoly p = -((x - a) * (x - b));
        c.multipliers.push_back(new_gram(prog, product_basis(monomial_basis({v}, d0 - 1), extra), n));
        c.region.push_back(p);
    }
    emit(prog, c);
    prog.constraints.push_back(c);
    return c;
}

SosConstraint putinar(Program& prog, const LMatrix& target, const std::vector<RPoly>& region, int d_mult,
                      std::string label) {
    require_square_symmetric(target);
    if (d_mult < 0) throw std::invalid_argument("putinar: negative multiplier degree");
    SosConstraint c;
    c.label = std::move(label);
    c.target = target;
    const int n = static_cast<int>(target.rows());
    std::vector<int> vars = matrix_vars(target);
    int top = std::max(0, target.degree());
    for (const auto& g : region) {
        auto gv = g.variables();
        vars.insert(vars.end(), gv.begin(), gv.end());
        top = std::max(top, g.degree() + 2 * (d_mult / 2));
    }
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    c.gram = new_gram(prog, monomial_basis(vars, ceil_half(top)), n);
    for (const auto& g : region) {
        c.multipliers.push_back(new_gram(prog, monomial_basis(vars, d_mult / 2), n));
        c.region.push_back(g);
    }
    emit(prog, c);
    prog.constraints.push_back(c);
    return c;
}

DMatrix gram_expand(const Eigen::MatrixXd& gram, const MonomialBasis& basis, int n) {
    const int N = static_cast<int>(basis.size());
    if (gram.rows() != n * N || gram.cols() != n * N) throw std::invalid_argument("gram size mismatch");
    DMatrix out(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    double g = gram(r * N + i, c * N + j);
                    if (g == 0.0) continue;
                    out(static_cast<std::size_t>(r), static_cast<std::size_t>(c))
                        .add(basis.monomials[static_cast<std::size_t>(i)] * basis.monomials[static_cast<std::size_t>(j)], g);
                }
    return out;
}

namespace {
double max_coef_diff(const DPoly& a, const DPoly& b) {
    double worst = 0;
    DPoly d = a - b;
    for (const auto& [m, c] : d.terms()) worst = std::max(worst, std::abs(c));
    return worst;
}
double min_eig(const Eigen::MatrixXd& g) {
    if (g.size() == 0) return 0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}
}  // namespace

DecompositionReport check_decomposition(const DPoly& p, const Eigen::MatrixXd& gram, const MonomialBasis& basis) {
    DMatrix m(1, 1);
    m(0, 0) = p;
    return check_decomposition(m, gram, basis);
}

DecompositionReport check_decomposition(const DMatrix& p, const Eigen::MatrixXd& gram, const MonomialBasis& basis) {
    DecompositionReport r;
    const int n = static_cast<int>(p.rows());
    if (gram.size() == 0 && basis.size() == 0) {
        for (std::size_t i = 0; i < p.rows(); ++i)
            for (std::size_t j = 0; j < p.cols(); ++j) r.residual = std::max(r.residual, max_coef_diff(p(i, j), DPoly()));
        return r;
    }
    DMatrix z = gram_expand(gram, basis, n);
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j) r.residual = std::max(r.residual, max_coef_diff(p(i, j), z(i, j)));
    r.min_eig = min_eig(gram);
    return r;
}

double gram_residual(const Program& prog, const sdp::SdpSolution& sol) {
    auto vals = sol.values(prog.sdp);
    double worst = 0;
    for (const auto& c : prog.constraints) {
        DMatrix t = c.target.map([&](const LPoly& p) { return assign(p, vals); });
        DMatrix rep = gram_expand(sol.blocks.at(static_cast<std::size_t>(c.gram.handle.block)), c.gram.basis, c.gram.n);
        for (std::size_t k = 0; k < c.multipliers.size(); ++k) {
            const auto& g = c.multipliers[k];
            DMatrix s = gram_expand(sol.blocks.at(static_cast<std::size_t>(g.handle.block)), g.basis, g.n);
            DPoly region = to_double(c.region[k]);
            for (std::size_t i = 0; i < s.rows(); ++i)
                for (std::size_t j = 0; j < s.cols(); ++j) rep(i, j) += s(i, j) * region;
        }
        for (std::size_t i = 0; i < t.rows(); ++i)
            for (std::size_t j = 0; j < t.cols(); ++j) worst = std::max(worst, max_coef_diff(t(i, j), rep(i, j)));
    }
    return worst;
}

double min_gram_eigenvalue(const SosConstraint& c, const sdp::SdpSolution& sol) {
    double m = min_eig(sol.blocks.at(static_cast<std::size_t>(c.gram.handle.block)));
    for (const auto& g : c.multipliers) m = std::min(m, min_eig(sol.blocks.at(static_cast<std::size_t>(g.handle.block))));
    return m;
}

}  // namespace delaycert::sos
