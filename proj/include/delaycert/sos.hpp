#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delaycert/polynomial.hpp"
#include "delaycert/sdp.hpp"

namespace delaycert::sos {

/// Gram variable over Z̄ = Iₙ ⊗ Z, i.e. the block index of (row r, monomial i) is r·|Z|+i.
struct GramBlock {
    sdp::BlockHandle handle;
    poly::MonomialBasis basis;
    int n = 1;
};

struct SosConstraint {
    std::string label;
    poly::LMatrix target;
    GramBlock gram;                          // σ₀
    std::vector<GramBlock> multipliers;      // σᵢ
    std::vector<poly::RPoly> region;         // gᵢ, aligned with multipliers
    std::vector<int> rows;                   // equality rows emitted
};

/// An SDP under construction together with the polynomial constraints it encodes.
struct Program {
    sdp::SdpProblem sdp;
    std::vector<SosConstraint> constraints;

    poly::LinExpr new_free();
    /// Symmetric n×n matrix of fresh free unknowns.
    poly::LMatrix symmetric_unknown(std::size_t n);
    poly::LMatrix unknown(std::size_t rows, std::size_t cols);
    /// Matrix polynomial with fresh free coefficients on every monomial of `basis`.
    poly::LMatrix unknown_poly(std::size_t rows, std::size_t cols, const poly::MonomialBasis& basis, bool symmetric);
};

/// target ∈ Σ_s: Z_dᵀQZ_d with Q ⪰ 0; basis degree = deg/2 unless given.
SosConstraint sos(Program& prog, const poly::LPoly& target, std::optional<int> basis_degree = {},
                   std::string label = "sos");
/// target ∈ Σ̄_s (matrix SOS) over Z̄ⁿ_d.
SosConstraint matrix_sos(Program& prog, const poly::LMatrix& target, std::optional<int> basis_degree = {},
                          std::string label = "matrix_sos");

struct IntervalOptions {
    /// Basis over the remaining variables (parameters); default derived from the target.
    std::optional<poly::MonomialBasis> extra;
    std::string label = "interval";
};
/// target(v) ≡ Z̄ᵀS₀Z̄ + p(v)·Z̄ᵀS₁Z̄ with p(v) = −(v−a)(v−b) ≥ 0 on [a,b].
SosConstraint interval_positivity(Program& prog, const poly::LMatrix& target, int v, const poly::RPoly& a,
                                   const poly::RPoly& b, const IntervalOptions& opts = {});

/// target − Σ gᵢσᵢ ∈ Σ̄_s with σᵢ ∈ Σ̄_s of degree ≤ d_mult.
SosConstraint putinar(Program& prog, const poly::LMatrix& target, const std::vector<poly::RPoly>& region,
                       int d_mult, std::string label = "putinar");

/// target − Σ gᵢσᵢ ∈ Σ̄_s with caller-chosen Gram bases: bases[0] for σ₀, bases[i] for σᵢ.
SosConstraint sos_with_bases(Program& prog, const poly::LMatrix& target, const std::vector<poly::RPoly>& region,
                             const std::vector<poly::MonomialBasis>& bases, std::string label = "sos");

struct DecompositionReport {
    double residual = 0;  // ‖poly − ZᵀQZ‖∞ over coefficients
    double min_eig = 0;
};
DecompositionReport check_decomposition(const poly::DPoly& p, const Eigen::MatrixXd& gram,
                                        const poly::MonomialBasis& basis);
DecompositionReport check_decomposition(const poly::DMatrix& p, const Eigen::MatrixXd& gram,
                                        const poly::MonomialBasis& basis);

/// Z̄ᵀGZ̄ for a numeric Gram matrix.
poly::DMatrix gram_expand(const Eigen::MatrixXd& gram, const poly::MonomialBasis& basis, int n);

/// Largest coefficient mismatch between each solved target and its solved Gram
/// representation, over every constraint in the program.
double gram_residual(const Program& prog, const sdp::SdpSolution& sol);

/// Smallest eigenvalue across the Gram blocks of one constraint.
double min_gram_eigenvalue(const SosConstraint& c, const sdp::SdpSolution& sol);

}  // namespace delaycert::sos
