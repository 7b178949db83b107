#pragma once

#include <Eigen/Eigenvalues>
#include <vector>

#include "spc/core/eigen_pair.hpp"
#include "spc/core/errors.hpp"

namespace spc {

/// @brief Full dense non-symmetric eigendecomposition (oracle).
///
/// Hessenberg reduction and shifted QR via Eigen::EigenSolver, capped at
/// 30n QR iterations. Left vectors are the right vectors of Mᵀ matched by
/// conjugate eigenvalue, the same rule as top_eigenpairs.
inline std::vector<EigenPair> dense_reference_eig(const Mat& m) {
    require(m.rows() == m.cols(), "dense_reference_eig: matrix must be square");
    require(m.rows() <= 512, "dense_reference_eig: n must be <= 512");
    const Index n = m.rows();
    std::vector<EigenPair> pairs;
    if (n == 0) return pairs;

    auto solve = [n](const Mat& a) {
        Eigen::EigenSolver<Mat> es;
        es.setMaxIterations(30 * n);
        es.compute(a, true);
        if (es.info() != Eigen::Success)
            throw NumericalConsistencyError("dense_reference_eig: QR iteration did not converge");
        return es;
    };
    const auto es = solve(m);
    const auto et = solve(m.transpose());

    std::vector<cplx> rv(n), lv(n);
    for (Index i = 0; i < n; ++i) {
        rv[i] = es.eigenvalues()[i];
        lv[i] = std::conj(et.eigenvalues()[i]);
    }
    const auto match = greedy_match(rv, lv);
    const CMat vr = es.eigenvectors();
    const CMat vl = et.eigenvectors();
    const CMat mc = m.cast<cplx>();
    for (Index i = 0; i < n; ++i) {
        EigenPair p;
        p.value = rv[i];
        p.right = vr.col(i).normalized();
        p.left = vl.col(match[i]).normalized();
        p.residual = (mc * p.right - p.value * p.right).norm();
        p.converged = true;
        align_pair(p);
        pairs.push_back(std::move(p));
    }
    sort_pairs(pairs);
    flag_clusters(pairs);
    return pairs;
}

}  // namespace spc
