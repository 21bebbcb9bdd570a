#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "delaycert/sdp.hpp"

namespace delaycert::sdp {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

ConeLayout::ConeLayout(std::vector<int> block_sizes) : sizes(std::move(block_sizes)) {
    for (int n : sizes) {
        offsets.push_back(dim);
        dim += n * (n + 1) / 2;
        rank += n;
    }
}

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    Eigen::VectorXd v(n * (n + 1) / 2);
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) v(k++) = (i == j) ? m(i, i) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
    return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n) {
    Eigen::MatrixXd m(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double x = v(k++);
            if (i == j) {
                m(i, i) = x;
            } else {
                m(i, j) = m(j, i) = x / kSqrt2;
            }
        }
    return m;
}

Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& A, const std::vector<Eigen::MatrixXd>& W,
                                 const ConeLayout& layout) {
    const int m = static_cast<int>(A.rows());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    // 1x1 blocks are scalar cones; batch them into one scaled product.
    std::vector<int> scalar_blocks;
    for (std::size_t b = 0; b < layout.sizes.size(); ++b)
        if (layout.sizes[b] == 1) scalar_blocks.push_back(static_cast<int>(b));
    if (!scalar_blocks.empty()) {
        Eigen::MatrixXd As(m, scalar_blocks.size()), Bs(m, scalar_blocks.size());
        for (std::size_t k = 0; k < scalar_blocks.size(); ++k) {
            const auto b = static_cast<std::size_t>(scalar_blocks[k]);
            const double w2 = W[b](0, 0) * W[b](0, 0);
            As.col(static_cast<Eigen::Index>(k)) = A.col(layout.offsets[b]);
            Bs.col(static_cast<Eigen::Index>(k)) = w2 * A.col(layout.offsets[b]);
        }
        M.noalias() += As * Bs.transpose();
    }
    // With W = L Lᵀ, M_ij = <Lᵀ A_i L, Lᵀ A_j L>, so each block contributes P Pᵀ
    // where row j of P is svec(Lᵀ A_j L). Congruences are batched into GEMMs.
    constexpr int kBatch = 32;
    for (std::size_t b = 0; b < layout.sizes.size(); ++b) {
        const int n = layout.sizes[b];
        const int off = layout.offsets[b];
        const int dim = n * (n + 1) / 2;
        if (n == 1) continue;
        Eigen::LLT<Eigen::MatrixXd> llt(W[b]);
        if (llt.info() != Eigen::Success) return schur_complement_serial(A, W, layout);
        const Eigen::MatrixXd L = llt.matrixL();
        Eigen::MatrixXd P(m, dim);
        const int batches = (m + kBatch - 1) / kBatch;
#pragma omp parallel for schedule(dynamic)
        for (int t = 0; t < batches; ++t) {
            const int j0 = t * kBatch;
            const int cnt = std::min(kBatch, m - j0);
            Eigen::MatrixXd V(static_cast<Eigen::Index>(n) * cnt, n);
            for (int k = 0; k < cnt; ++k)
                V.middleRows(static_cast<Eigen::Index>(k) * n, n) = smat(A.row(j0 + k).segment(off, dim).transpose(), n);
            Eigen::MatrixXd U = V * L.triangularView<Eigen::Lower>();  // A_j L
            Eigen::MatrixXd H(n, static_cast<Eigen::Index>(n) * cnt);
            for (int k = 0; k < cnt; ++k)
                H.middleCols(static_cast<Eigen::Index>(k) * n, n) = U.middleRows(static_cast<Eigen::Index>(k) * n, n);
            Eigen::MatrixXd Z = L.transpose().triangularView<Eigen::Upper>() * H;  // Lᵀ A_j L
            for (int k = 0; k < cnt; ++k)
                P.row(j0 + k) = svec(Z.middleCols(static_cast<Eigen::Index>(k) * n, n)).transpose();
        }
        M.selfadjointView<Eigen::Lower>().rankUpdate(P);
    }
    return M.selfadjointView<Eigen::Lower>();
}

Eigen::MatrixXd schur_complement_serial(const Eigen::MatrixXd& A, const std::vector<Eigen::MatrixXd>& W,
                                        const ConeLayout& layout) {
    const int m = static_cast<int>(A.rows());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t b = 0; b < layout.sizes.size(); ++b) {
        const int n = layout.sizes[b];
        const int off = layout.offsets[b];
        const int dim = n * (n + 1) / 2;
        std::vector<Eigen::MatrixXd> mats(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) mats[static_cast<std::size_t>(i)] = smat(A.row(i).segment(off, dim).transpose(), n);
        for (int j = 0; j < m; ++j) {
            Eigen::MatrixXd WAW = W[b] * mats[static_cast<std::size_t>(j)] * W[b];
            for (int i = 0; i <= j; ++i) {
                double s = 0;
                const auto& Ai = mats[static_cast<std::size_t>(i)];
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c) s += Ai(r, c) * WAW(r, c);
                M(i, j) += s;
                if (i != j) M(j, i) += s;
            }
        }
    }
    return M;
}

}  // namespace delaycert::sdp
