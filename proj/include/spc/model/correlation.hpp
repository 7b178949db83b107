#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spc/core/errors.hpp"
#include "spc/model/ground_truth.hpp"
#include "spc/model/profile.hpp"

namespace spc {

/// fixed: s = 0…ℓ (ℓ+1 terms for γ̂). converged: until the terms are
/// negligible, which is the large-n limit of the same sums.
enum class Truncation { fixed, converged };

inline std::string truncation_name(Truncation t) { return t == Truncation::fixed ? "fixed" : "converged"; }
inline Truncation parse_truncation(const std::string& s) {
    if (s == "fixed") return Truncation::fixed;
    if (s == "converged") return Truncation::converged;
    throw ContractViolation("unknown truncation '" + s + "' (fixed | converged)");
}

struct SeriesOptions {
    Truncation policy = Truncation::converged;
    int max_terms = 10000;
    double rel_tol = 1e-13;
    int count = -1;  // number of indices tabulated, -1 → r₀
};

struct SeriesResult {
    double sum = 0.0;
    int terms = 0;
    bool converged = true;
};

/// Σ_{s=s0}^{last} ⟨1, Q^s v⟩ / den^s; Q^s v is advanced one power at a time
/// with the denominator folded in so nothing overflows.
template <class Q>
SeriesResult q_series(const Q& q, Vec v, double den, int s0, int last, const SeriesOptions& opt) {
    SeriesResult r;
    require(den != 0.0, "correlation series: zero denominator (index above r0?)");
    const bool open = opt.policy == Truncation::converged;
    const int stop = open ? opt.max_terms : last;
    int quiet = 0;
    const double scale0 = v.cwiseAbs().sum();
    for (int s = 0; s <= stop; ++s) {
        if (s > 0) v = q.apply(v) / den;
        if (s < s0) continue;
        const double term = v.sum();
        r.sum += term;
        ++r.terms;
        if (!std::isfinite(r.sum)) {
            r.converged = false;
            return r;
        }
        if (open) {
            // zero terms can be structural (bipartite parity), so require a
            // run of small ones and a small vector, not a single small sum
            const double small = opt.rel_tol * std::max({std::abs(r.sum), scale0, 1e-300});
            quiet = (std::abs(term) <= small && v.cwiseAbs().sum() <= small) ? quiet + 1 : 0;
            if (quiet >= 2) return r;
        }
    }
    if (open) r.converged = false;
    return r;
}

/// @brief γ, Γ and their Hermitized and NB companions.
struct CorrelationTables {
    Variant variant = Variant::square;
    Truncation policy = Truncation::converged;
    double d_used = 0.0;
    int ell = 0;
    int count = 0;
    std::vector<double> gamma;
    Mat Gamma;
    // rectangular only
    std::vector<double> gamma_tri, gamma_nab;
    Mat Gamma_tri, Gamma_nab, Gamma_pm;
    // nb only
    std::vector<double> gamma_hat;
    bool converged = true;
    int max_terms_used = 0;
};

inline CorrelationTables correlation_tables(const GroundTruth& gt, const DetectionProfile& prof,
                                            const SeriesOptions& opt = {}) {
    CorrelationTables t;
    t.variant = prof.variant;
    t.policy = opt.policy;
    t.d_used = prof.d_used;
    t.ell = prof.ell;
    const int rank = static_cast<int>(gt.rank());
    t.count = opt.count < 0 ? prof.r0 : opt.count;
    require(t.count <= rank, "correlation_tables: count exceeds rank");
    const int k = t.count;
    const int last = prof.ell;
    auto track = [&](const SeriesResult& s) {
        t.converged = t.converged && s.converged;
        t.max_terms_used = std::max(t.max_terms_used, s.terms);
        return s.sum;
    };

    if (prof.variant == Variant::rectangular) {
        require(prof.n_used == gt.m + gt.n, "correlation_tables: profile does not match truth");
        const VarianceOperator q(gt, true);
        const double s2 = std::sqrt(0.5);
        auto plus = [&](int i) {
            Vec v(gt.m + gt.n);
            v << s2 * gt.left.col(i), s2 * gt.right.col(i);
            return v;
        };
        auto minus = [&](int i) {
            Vec v(gt.m + gt.n);
            v << -s2 * gt.left.col(i), s2 * gt.right.col(i);
            return v;
        };
        t.Gamma = Mat::Zero(k, k);
        t.Gamma_pm = Mat::Zero(k, k);
        t.Gamma_tri = Mat::Zero(k, k);
        t.Gamma_nab = Mat::Zero(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const double si = gt.sigma[i], sj = gt.sigma[j];
                const double dd = prof.d_used;
                t.Gamma(i, j) = track(q_series(q, Vec(plus(i).cwiseProduct(plus(j))), si * sj * dd, 0, last, opt));
                t.Gamma_pm(i, j) =
                    track(q_series(q, Vec(plus(i).cwiseProduct(minus(j))), -si * sj * dd, 0, last, opt));
                Vec up = Vec::Zero(gt.m + gt.n), dn = Vec::Zero(gt.m + gt.n);
                up.head(gt.m) = gt.left.col(i).cwiseProduct(gt.left.col(j));
                dn.tail(gt.n) = gt.right.col(i).cwiseProduct(gt.right.col(j));
                t.Gamma_tri(i, j) = track(q_series(q, up, si * si * dd, 0, last, opt));
                t.Gamma_nab(i, j) = track(q_series(q, dn, si * si * dd, 0, last, opt));
            }
        for (int i = 0; i < k; ++i) {
            t.gamma.push_back(t.Gamma(i, i));
            t.gamma_tri.push_back(t.Gamma_tri(i, i));
            t.gamma_nab.push_back(t.Gamma_nab(i, i));
        }
        return t;
    }

    require(gt.symmetric, "correlation_tables: square and nb variants need a symmetric truth");
    const VarianceOperator q(gt, false);
    const std::vector<double> mu = gt.mu();
    t.Gamma = Mat::Zero(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
            const Vec v = gt.right.col(i).cwiseProduct(gt.right.col(j));
            t.Gamma(i, j) = t.Gamma(j, i) = track(q_series(q, v, mu[i] * mu[j] * prof.d_used, 0, last, opt));
        }
    for (int i = 0; i < k; ++i) t.gamma.push_back(t.Gamma(i, i));
    if (prof.variant == Variant::nb)
        for (int i = 0; i < k; ++i) {
            const Vec v = gt.right.col(i).cwiseAbs2();
            t.gamma_hat.push_back(prof.d_used *
                                  track(q_series(q, v, mu[i] * mu[i] * prof.d_used, 1, last + 1, opt)));
        }
    return t;
}

}  // namespace spc
