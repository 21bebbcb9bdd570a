#pragma once

// Positive multiplier and integral-operator cones over a delay interval,
// compiled into Gram blocks, spacing functions and coefficient equalities.

#include <vector>

#include "delaycert/polynomial.hpp"
#include "delaycert/sos.hpp"

namespace delaycert::cones {

/// [-b_K, 0] split into pieces [-b_{i+1}, -b_i]; a single piece is the continuous case.
struct Domain {
    std::vector<poly::Rational> bounds;  // 0 = b_0 < b_1 < ... < b_K

    static Domain interval(const poly::Rational& tau);
    /// Breakpoints from the delays tau_1 < ... < tau_K.
    static Domain pieces(const std::vector<poly::Rational>& delays);

    int size() const { return static_cast<int>(bounds.size()) - 1; }
    poly::Rational lo(int i) const { return -bounds[static_cast<std::size_t>(i) + 1]; }
    poly::Rational hi(int i) const { return -bounds[static_cast<std::size_t>(i)]; }
    poly::Rational width(int i) const { return hi(i) - lo(i); }
    poly::Rational length() const { return bounds.back(); }
    /// Affine map theta' = alpha*theta + beta sending piece i onto [-b_K, 0].
    std::pair<poly::Rational, poly::Rational> piece_map(int i) const;
};

struct Options {
    int theta = poly::var("theta");
    int omega = poly::var("omega");
    /// Uncertain parameters the cone data may depend on.
    std::vector<int> params;
    /// Parameter degree for spacing functions and kernel bases; -1 derives it from the target.
    int param_degree = -1;
    /// Region {g_i(y) >= 0} for the kernel cones; multiplier cones take it via param_dependent.
    std::vector<poly::RPoly> region;
    /// Spacing functions only: parameter monomials start at this degree, and
    /// theta^k * y^a is kept only when k + |a| <= total_degree (when non-negative).
    int param_min_degree = 0;
    int total_degree = -1;
    std::string label = "cone";
};

/// T_i on each piece, with sum_i int_{piece i} T_i = 0 built into the parametrization.
struct SpacingFunction {
    int n = 0;
    std::vector<poly::LMatrix> pieces;
};

/// Zero-integral spacing function of degree d in theta. The coefficients are
/// taken over a basis whose members each integrate to exactly zero, so no
/// equality rows are needed and the solved T integrates to zero in exact
/// arithmetic.
SpacingFunction spacing_var(sos::Program& prog, int n, const Domain& dom, int d, const Options& opts = {});
/// Sum of piece integrals; identically zero for spacing_var output.
poly::LMatrix spacing_integral(const SpacingFunction& t, const Domain& dom, int theta);

struct MultiplierConstraint {
    SpacingFunction spacing;
    std::vector<sos::SosConstraint> pieces;
};

/// M in G1 (2n x 2n per piece): M_i + diag(T_i, 0) >= 0 on piece i.
MultiplierConstraint g1(sos::Program& prog, const std::vector<poly::LMatrix>& m, const Domain& dom, int n, int d,
                        const Options& opts = {});
/// M in G3 ((K+2)n x (K+2)n per piece), spacing block of size (K+1)n.
MultiplierConstraint g3(sos::Program& prog, const std::vector<poly::LMatrix>& m, const Domain& dom, int n, int d,
                        const Options& opts = {});

/// Finite-rank positive kernel. Continuous: R(theta,omega) = Z(theta)^T Q Z(omega).
/// Piecewise: a continuous nK x nK kernel Rhat on [-b_K,0] whose block (i,j),
/// composed with the piece maps, gives R on piece i x piece j.
struct KernelVariable {
    std::vector<sos::GramBlock> grams;  // one per region term (first is unconditioned)
    int n = 0;
    poly::LMatrix hat;                          // nK x nK in (theta, omega) on [-b_K,0]^2
    std::vector<std::vector<poly::LMatrix>> blocks;  // K x K pieces of n x n in global coordinates
};

KernelVariable g2_kernel(sos::Program& prog, int n, const Domain& dom, int d, bool piecewise,
                         const Options& opts = {});
/// Constrain a given kernel (K x K blocks of n x n, global coordinates) to lie in G2 with basis degree d.
KernelVariable g2_member(sos::Program& prog, const std::vector<std::vector<poly::LMatrix>>& m, const Domain& dom,
                         int d, const Options& opts = {});

enum class Cone { G1, G3 };
/// M(theta, y) = S_0 + sum_k p_k(y) S_k with every S_k in the cone; the region
/// is {p_k >= 0}. An empty region is the unconditioned builder.
std::vector<MultiplierConstraint> param_dependent(sos::Program& prog, Cone cone, const std::vector<poly::LMatrix>& m,
                                                  const Domain& dom, int n, const std::vector<poly::RPoly>& region,
                                                  int d, const Options& opts = {});

/// Numeric kernel block from a solved kernel variable.
poly::DMatrix solved(const poly::LMatrix& m, const std::vector<double>& values);

}  // namespace delaycert::cones
