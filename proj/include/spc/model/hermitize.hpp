#pragma once

#include <cmath>

#include "spc/core/linear_operator.hpp"
#include "spc/model/ground_truth.hpp"

namespace spc {

/// P̃ = [0 P; Pᵀ 0] of size ñ = m + n with eigenvectors φ± = (±ζ; ξ)/√2
/// for the eigenvalues ±σ.
struct HermitizedProblem {
    Index m = 0;
    Index n = 0;
    Mat phi_plus;   // ñ x r
    Mat phi_minus;  // ñ x r
    std::vector<double> sigma;
    LinearOperator op;

    Index size() const { return m + n; }
};

inline HermitizedProblem hermitize(const GroundTruth& gt) {
    HermitizedProblem h;
    h.m = gt.m;
    h.n = gt.n;
    h.sigma = gt.sigma;
    const Index r = gt.rank(), nt = gt.m + gt.n;
    const double s = 1.0 / std::sqrt(2.0);
    h.phi_plus.resize(nt, r);
    h.phi_minus.resize(nt, r);
    for (Index k = 0; k < r; ++k) {
        h.phi_plus.col(k) << s * gt.left.col(k), s * gt.right.col(k);
        h.phi_minus.col(k) << -s * gt.left.col(k), s * gt.right.col(k);
    }
    auto ls = std::make_shared<const Mat>(gt.left_scaled());
    auto rt = std::make_shared<const Mat>(gt.right);
    const Index m = gt.m, n = gt.n;
    auto apply = [ls, rt, m, n](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        using S = typename V::Scalar;
        V out(m + n);
        out.head(m) = ls->template cast<S>() * (rt->transpose().template cast<S>() * v.tail(n));
        out.tail(n) = rt->template cast<S>() * (ls->transpose().template cast<S>() * v.head(m));
        return out;
    };
    h.op = LinearOperator::from_generic(nt, nt, apply, apply);
    return h;
}

}  // namespace spc
