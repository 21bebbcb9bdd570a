#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "delaycert/polynomial.hpp"

namespace delaycert::sdp {

/// A PSD block; entries (i,j) and (j,i) address the same scalar unknown.
struct BlockHandle {
    int block = -1;
    int size = 0;
    int first_id = 0;
    int id(int i, int j) const;
};

struct FreeHandle {
    int id = -1;
};

struct Term {
    int var;
    double coef;
};

/// Σ coef·var = rhs. A coefficient on an off-diagonal block entry multiplies
/// the single scalar X_ij (so ⟨A,X⟩ with A_ij = A_ji = coef/2).
struct Constraint {
    std::vector<Term> terms;
    double rhs = 0;
};

struct VarInfo {
    int block;  // -1 for a free scalar
    int i, j;   // entry for block vars, free index in i otherwise
};

class SdpProblem {
public:
    BlockHandle add_block(int size);
    FreeHandle add_free();
    int add_equality(std::vector<Term> lincomb, double rhs);
    /// Records expr == 0; the constant moves to the right-hand side. Returns -1
    /// when expr is identically zero.
    int add_equality(const poly::LinExpr& expr);
    /// Objective to maximize.
    void set_objective(std::vector<Term> terms);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_blocks() const { return static_cast<int>(block_sizes_.size()); }
    int num_free() const { return static_cast<int>(free_ids_.size()); }
    const std::vector<int>& block_sizes() const { return block_sizes_; }
    const std::vector<int>& block_first_id() const { return block_first_; }
    const std::vector<int>& free_ids() const { return free_ids_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::vector<Term>& objective() const { return objective_; }
    const VarInfo& info(int id) const { return vars_.at(static_cast<std::size_t>(id)); }
    BlockHandle block(int b) const;

    friend bool operator==(const SdpProblem& a, const SdpProblem& b);

private:
    std::vector<Term> fold(std::vector<Term> terms) const;
    std::vector<VarInfo> vars_;
    std::vector<int> block_sizes_, block_first_, free_ids_;
    std::vector<Constraint> constraints_;
    std::vector<Term> objective_;
};

enum class Status { Feasible, Infeasible, NumericalFailure };
std::string to_string(Status s);

struct SolverOptions {
    double gap_tol = 1e-9;
    double feas_tol = 1e-9;
    int max_iterations = 200;
    bool parallel = true;  // OpenMP Schur assembly; false selects the serial reference
    bool verbose = false;
};

struct SdpSolution {
    Status status = Status::NumericalFailure;
    std::string message;
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<double> free;
    double objective = 0;       // primal objective (maximized)
    double dual_objective = 0;
    double equality_residual = 0;  // ‖Ax−b‖∞ on the original constraints
    double dual_residual = 0;
    std::vector<double> min_eigenvalues;
    int iterations = 0;
    bool inaccurate = false;       // stopped on a stall with residuals within the acceptance band
    std::vector<double> dual_ray;  // Farkas multipliers per original constraint when infeasible
    double seconds = 0;

    /// Values of all scalar unknowns, indexed like SdpProblem ids.
    std::vector<double> values(const SdpProblem& p) const;
};

SdpSolution solve(const SdpProblem& problem, const SolverOptions& opts = {});

struct RayCheck {
    bool valid = false;
    double b_dot = 0;          // bᵀλ after normalization (1 when valid)
    double free_residual = 0;  // ‖A_fᵀλ‖∞
    double min_eig = 0;        // min eigenvalue of −A_sᵀλ over blocks
};
/// Verifies λ: A_fᵀλ = 0, −A_sᵀλ ⪰ 0, bᵀλ > 0 (λ rescaled so bᵀλ = 1).
RayCheck check_infeasibility_ray(const SdpProblem& problem, const std::vector<double>& lambda, double tol = 1e-6);

std::string export_sdpa(const SdpProblem& problem);
SdpProblem parse_sdpa(const std::string& text);

// Symmetric-vector layout shared by the solver and the Schur kernels.
struct ConeLayout {
    std::vector<int> sizes;
    std::vector<int> offsets;  // into the svec vector
    int dim = 0;
    int rank = 0;  // Σ sizes
    explicit ConeLayout(std::vector<int> block_sizes);
};

Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n);

/// M_ij = ⟨A_i, W A_j W⟩ summed over blocks, rows of A in svec coordinates.
Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& A, const std::vector<Eigen::MatrixXd>& W,
                                 const ConeLayout& layout);
/// Straight-line reference of the same quantity, one entry at a time.
Eigen::MatrixXd schur_complement_serial(const Eigen::MatrixXd& A, const std::vector<Eigen::MatrixXd>& W,
                                        const ConeLayout& layout);

}  // namespace delaycert::sdp
