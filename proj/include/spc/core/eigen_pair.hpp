#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "spc/core/types.hpp"

namespace spc {

struct EigenPair {
    cplx value{0.0, 0.0};
    CVec right;
    CVec left;
    double lr_overlap = 0.0;  // <left, right> after phase alignment, always >= 0
    double residual = 0.0;    // |M right - value right|
    bool converged = false;
    bool cluster = false;    // another returned value within 1e-6 |value|
    bool defective = false;  // left and right numerically orthogonal
};

struct EigenSolveReport {
    std::vector<EigenPair> pairs;
    int iterations = 0;
    int matvecs = 0;
    double bulk_radius_estimate = 0.0;  // modulus of the (k+1)-th Ritz value

    std::vector<bool> converged() const {
        std::vector<bool> c;
        for (const auto& p : pairs) c.push_back(p.converged);
        return c;
    }
    bool all_converged() const {
        return std::all_of(pairs.begin(), pairs.end(), [](const EigenPair& p) { return p.converged; });
    }
};

constexpr double kRealThreshold = 1e-8;
constexpr double kClusterThreshold = 1e-6;

inline bool numerically_real(cplx z, double rel = kRealThreshold) {
    return std::abs(z.imag()) <= rel * std::max(std::abs(z), 1e-300);
}

/// Ordering used everywhere: |λ| descending, then Re λ, then Im λ.
inline bool eigen_order(cplx a, cplx b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

/// Modulus comparison that treats values equal up to roundoff as ties, so
/// that conjugate pairs sort deterministically by their imaginary part.
inline bool eigen_order_tol(cplx a, cplx b, double rel = 1e-8) {
    const double ma = std::abs(a), mb = std::abs(b);
    const double scale = std::max({ma, mb, 1e-300});
    if (std::abs(ma - mb) > rel * scale) return ma > mb;
    if (std::abs(a.real() - b.real()) > rel * scale) return a.real() > b.real();
    return a.imag() > b.imag();
}

inline void sort_pairs(std::vector<EigenPair>& pairs) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const EigenPair& a, const EigenPair& b) { return eigen_order_tol(a.value, b.value); });
}

inline void flag_clusters(std::vector<EigenPair>& pairs) {
    for (auto& p : pairs) p.cluster = false;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t j = i + 1; j < pairs.size(); ++j) {
            const double scale = std::max({std::abs(pairs[i].value), std::abs(pairs[j].value), 1e-12});
            if (std::abs(pairs[i].value - pairs[j].value) < kClusterThreshold * scale)
                pairs[i].cluster = pairs[j].cluster = true;
        }
}

/// Rotate `v` so its largest-modulus entry is real positive.
inline void normalize_phase(CVec& v) {
    Index imax = 0;
    double best = -1.0;
    for (Index i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > best * (1.0 + 1e-12)) {
            best = std::abs(v[i]);
            imax = i;
        }
    if (best > 0) v *= std::conj(v[imax]) / best;
    const double nv = v.norm();
    if (nv > 0) v /= nv;
}

/// Phase conventions shared by the iterative and dense solvers.
/// right: unit, largest entry real positive; left: unit, <left,right> real >= 0.
/// A numerically real value with a numerically real right vector is snapped
/// to exactly real vectors.
inline void align_pair(EigenPair& p) {
    normalize_phase(p.right);
    if (p.left.size() == 0) return;
    const double nl = p.left.norm();
    if (nl > 0) p.left /= nl;
    const cplx ip = p.left.dot(p.right);  // conj(left) . right
    if (std::abs(ip) > 0) p.left *= ip / std::abs(ip);
    if (numerically_real(p.value)) {
        const double im_r = p.right.imag().cwiseAbs().maxCoeff();
        const double im_l = p.left.imag().cwiseAbs().maxCoeff();
        if (im_r < 1e-4 && im_l < 1e-4) {
            p.value = cplx(p.value.real(), 0.0);
            p.right = p.right.real().normalized().cast<cplx>();
            p.left = p.left.real().normalized().cast<cplx>();
            if (p.left.real().dot(p.right.real()) < 0) p.left = -p.left;
        }
    }
    p.lr_overlap = std::max(0.0, p.left.dot(p.right).real());
    p.defective = p.lr_overlap < 1e-6;
}

/// Greedy nearest-value assignment: returns for each a[i] the index of the
/// matched b, or -1 when b is exhausted.
inline std::vector<int> greedy_match(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    struct Cand {
        double dist;
        int i, j;
    };
    std::vector<Cand> c;
    for (int i = 0; i < static_cast<int>(a.size()); ++i)
        for (int j = 0; j < static_cast<int>(b.size()); ++j) c.push_back({std::abs(a[i] - b[j]), i, j});
    std::stable_sort(c.begin(), c.end(), [](const Cand& x, const Cand& y) { return x.dist < y.dist; });
    std::vector<int> ma(a.size(), -1), mb(b.size(), -1);
    for (const auto& x : c)
        if (ma[x.i] < 0 && mb[x.j] < 0) {
            ma[x.i] = x.j;
            mb[x.j] = x.i;
        }
    return ma;
}

}  // namespace spc
