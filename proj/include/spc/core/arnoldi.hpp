#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "spc/core/eigen_pair.hpp"
#include "spc/core/errors.hpp"
#include "spc/core/linear_operator.hpp"
#include "spc/core/rng.hpp"

namespace spc {

struct ArnoldiOptions {
    double tol = 1e-8;
    int max_restarts = 300;
    int krylov_dim = 0;  // 0 selects max(2k+2, 20)
    std::uint64_t seed = 1;
    bool compute_left = true;
    int extra_left = 2;  // additional eigenvalues requested on the transpose
};

namespace detail {

struct RitzResult {
    std::vector<cplx> values;
    CMat vectors;
    std::vector<double> residuals;
    std::vector<bool> converged;
    double next_modulus = 0.0;
    int restarts = 0;
    int matvecs = 0;
};

// Swap adjacent diagonal entries i, i+1 of the upper triangular T, keeping
// A U = U T.
inline void schur_swap(CMat& T, CMat& U, Index i) {
    const cplx a = T(i, i), b = T(i + 1, i + 1), c = T(i, i + 1);
    const cplx x1 = c, x2 = b - a;
    const double nx = std::hypot(std::abs(x1), std::abs(x2));
    if (nx == 0.0) return;
    Eigen::Matrix2cd Q;
    Q << x1 / nx, -std::conj(x2 / nx), x2 / nx, std::conj(x1 / nx);
    T.middleRows(i, 2) = (Q.adjoint() * T.middleRows(i, 2)).eval();
    T.middleCols(i, 2) = (T.middleCols(i, 2) * Q).eval();
    U.middleCols(i, 2) = (U.middleCols(i, 2) * Q).eval();
    T(i + 1, i) = 0.0;
}

// Reorder the Schur form so the diagonal follows eigen_order.
inline void schur_sort(CMat& T, CMat& U) {
    const Index m = T.rows();
    for (Index i = 0; i < m; ++i) {
        Index best = i;
        for (Index j = i + 1; j < m; ++j)
            if (eigen_order_tol(T(j, j), T(best, best))) best = j;
        for (Index j = best; j > i; --j) schur_swap(T, U, j - 1);
    }
}

// Eigenvector of the leading (i+1)x(i+1) block of upper triangular T for T(i,i).
inline CVec triangular_eigvec(const CMat& T, Index i, double smin) {
    CVec y = CVec::Zero(T.rows());
    y[i] = 1.0;
    const cplx lam = T(i, i);
    for (Index j = i - 1; j >= 0; --j) {
        cplx s = 0.0;
        for (Index l = j + 1; l <= i; ++l) s += T(j, l) * y[l];
        cplx den = T(j, j) - lam;
        if (std::abs(den) < smin) den = smin;
        y[j] = -s / den;
    }
    return y / y.norm();
}

template <class Apply>
RitzResult krylov_schur(Apply&& apply, Index n, int k, const ArnoldiOptions& opt, std::uint64_t substream,
                        int need = -1) {
    // only the leading `need` values gate restarts; the rest ride along
    if (need < 0 || need > k) need = k;
    const Index m = std::min<Index>(n, std::max<Index>({2 * Index(k) + 2, 20, Index(opt.krylov_dim)}));
    CMat V = CMat::Zero(n, m + 1);
    CMat H = CMat::Zero(m + 1, m);
    Rng rng = make_rng(opt.seed, stream::solver, substream);
    std::normal_distribution<double> gauss;
    RitzResult out;

    auto random_unit = [&](Index ncols) {
        CVec r(n);
        for (Index i = 0; i < n; ++i) r[i] = gauss(rng);
        for (int pass = 0; pass < 2 && ncols > 0; ++pass) r -= V.leftCols(ncols) * (V.leftCols(ncols).adjoint() * r);
        return CVec(r / r.norm());
    };

    auto expand = [&](Index from) {
        for (Index j = from; j < m; ++j) {
            CVec w = apply(CVec(V.col(j)));
            ++out.matvecs;
            const double w0 = w.norm();
            CVec h = V.leftCols(j + 1).adjoint() * w;
            w -= V.leftCols(j + 1) * h;
            CVec h2 = V.leftCols(j + 1).adjoint() * w;
            w -= V.leftCols(j + 1) * h2;
            H.col(j).head(j + 1) += h + h2;
            const double beta = w.norm();
            if (beta <= 1e-12 * w0 || beta == 0.0) {
                // invariant subspace: continue with a fresh direction, zero coupling
                H(j + 1, j) = 0.0;
                if (j + 1 >= n)
                    V.col(j + 1).setZero();
                else
                    V.col(j + 1) = random_unit(j + 1);
            } else {
                H(j + 1, j) = beta;
                V.col(j + 1) = w / beta;
            }
        }
    };

    V.col(0) = random_unit(0);
    expand(0);

    CMat T, U;
    Eigen::RowVectorXcd b;
    double hnorm = 0.0;
    for (int restart = 0;; ++restart) {
        out.restarts = restart;
        Eigen::ComplexSchur<CMat> schur(H.topLeftCorner(m, m));
        if (schur.info() != Eigen::Success) throw NumericalConsistencyError("krylov_schur: Schur form failed");
        T = schur.matrixT();
        U = schur.matrixU();
        schur_sort(T, U);
        b = H.row(m).head(m) * U;
        hnorm = std::max(T.norm(), 1e-300);
        const double smin = 1e-14 * hnorm;

        int nconv = 0;
        for (int i = 0; i < need; ++i) {
            const CVec y = triangular_eigvec(T, i, smin);
            const double res = std::abs((b * y).value());
            if (res <= opt.tol * std::max(std::abs(T(i, i)), 1e-6 * hnorm)) ++nconv;
        }
        if (nconv == need || restart >= opt.max_restarts || m == n) break;

        Index keep = std::min<Index>(m - 1, k + (m - k) / 2);
        keep = std::max<Index>(keep, k);
        // lock the leading Schur vectors whose coupling is negligible
        for (Index i = 0; i < keep; ++i) {
            if (std::abs(b[i]) <= 1e-2 * opt.tol * std::max(std::abs(T(i, i)), 1e-6 * hnorm))
                b[i] = 0.0;
            else
                break;
        }
        CMat Vk = V.leftCols(m) * U.leftCols(keep);
        V.col(keep) = V.col(m);
        V.leftCols(keep) = Vk;
        V.rightCols(m - keep).setZero();
        H.setZero();
        H.topLeftCorner(keep, keep) = T.topLeftCorner(keep, keep).triangularView<Eigen::Upper>();
        H.row(keep).head(keep) = b.head(keep);
        expand(keep);
    }

    const double smin = 1e-14 * hnorm;
    out.vectors.resize(n, k);
    for (int i = 0; i < k; ++i) {
        const CVec y = triangular_eigvec(T, i, smin);
        CVec x = V.leftCols(m) * (U * y);
        x /= x.norm();
        const cplx theta = T(i, i);
        const double res = (apply(x) - theta * x).norm();
        ++out.matvecs;
        out.values.push_back(theta);
        out.vectors.col(i) = x;
        out.residuals.push_back(res);
        out.converged.push_back(res <= opt.tol * std::max(std::abs(theta), 1e-6 * hnorm));
    }
    out.next_modulus = (m > k) ? std::abs(T(k, k)) : 0.0;
    return out;
}

}  // namespace detail

/// @brief Top-k eigenpairs (largest modulus) of a real square operator.
///
/// Krylov–Schur restarted Arnoldi in complex arithmetic. Left eigenvectors
/// come from a second run on the transpose: the left vector of A for λ is
/// the right vector of Aᵀ for conj(λ).
inline EigenSolveReport top_eigenpairs(const LinearOperator& op, int k, const ArnoldiOptions& opt = {}) {
    const Index n = op.dim_in();
    require(op.dim_out() == n, "top_eigenpairs: operator must be square");
    require(k >= 1 && k <= n, "top_eigenpairs: need 1 <= k <= n");
    require(opt.tol > 0, "top_eigenpairs: tol must be positive");

    auto right = detail::krylov_schur([&](const CVec& v) { return op.apply(v); }, n, k, opt, 1);
    EigenSolveReport rep;
    rep.iterations = right.restarts;
    rep.matvecs = right.matvecs;
    rep.bulk_radius_estimate = right.next_modulus;

    std::vector<EigenPair> pairs(k);
    for (int i = 0; i < k; ++i) {
        pairs[i].value = right.values[i];
        pairs[i].right = right.vectors.col(i);
        pairs[i].residual = right.residuals[i];
        pairs[i].converged = right.converged[i];
    }

    if (opt.compute_left) {
        const int kl = static_cast<int>(std::min<Index>(n, k + opt.extra_left));
        std::vector<cplx> rv;
        for (int i = 0; i < k; ++i) rv.push_back(right.values[i]);
        auto solve_left = [&](int need) {
            auto r = detail::krylov_schur([&](const CVec& v) { return op.apply_transpose(v); }, n, kl, opt, 2, need);
            rep.iterations += r.restarts;
            rep.matvecs += r.matvecs;
            std::vector<cplx> lv;
            for (int j = 0; j < kl; ++j) lv.push_back(std::conj(r.values[j]));
            return std::make_pair(r, greedy_match(rv, lv));
        };
        auto [left, match] = solve_left(k);
        // a conjugate pair split at the cut puts a partner past position k
        int need = 0;
        for (int i = 0; i < k; ++i)
            if (match[i] >= 0 && !left.converged[match[i]]) need = std::max(need, match[i] + 1);
        if (need > k) std::tie(left, match) = solve_left(need);
        for (int i = 0; i < k; ++i) {
            if (match[i] < 0) {
                pairs[i].left = CVec::Zero(n);
                pairs[i].converged = false;
                continue;
            }
            pairs[i].left = left.vectors.col(match[i]);
            pairs[i].converged = pairs[i].converged && left.converged[match[i]];
        }
    }
    for (auto& p : pairs) align_pair(p);
    sort_pairs(pairs);
    flag_clusters(pairs);
    rep.pairs = std::move(pairs);
    return rep;
}

}  // namespace spc
