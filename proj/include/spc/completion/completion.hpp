#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spc/core/arnoldi.hpp"
#include "spc/core/dense_eig.hpp"
#include "spc/core/errors.hpp"
#include "spc/core/linear_operator.hpp"
#include "spc/core/rng.hpp"
#include "spc/core/sparse_matrix.hpp"
#include "spc/model/correlation.hpp"
#include "spc/model/ground_truth.hpp"

namespace spc {

enum class Method { svd_baseline, sim, avg };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::svd_baseline: return "svd";
        case Method::sim: return "sim";
        case Method::avg: return "avg";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "svd" || s == "svd_baseline") return Method::svd_baseline;
    if (s == "sim") return Method::sim;
    if (s == "avg") return Method::avg;
    throw ContractViolation("unknown method '" + s + "' (sim | avg | svd)");
}

struct RandomSplit {
    SparseMatrix C1;
    SparseMatrix C2;
    std::uint64_t seed = 0;
};

/// Each stored entry of T goes to C1 on a fair coin, else to C2. Coins are
/// drawn in row-major storage order from make_rng(seed, stream::split).
inline RandomSplit split(const SparseMatrix& T, std::uint64_t seed) {
    Rng rng = make_rng(seed, stream::split);
    std::bernoulli_distribution coin(0.5);
    std::vector<Triplet> a, b;
    for (const auto& t : T.triplets()) (coin(rng) ? a : b).push_back(t);
    return {SparseMatrix(T.rows(), T.cols(), std::move(a)), SparseMatrix(T.rows(), T.cols(), std::move(b)), seed};
}

/// X = s² C1 C2ᵀ (m×m) and Y = s² C2ᵀ C1 (n×n), s = 2n/d, both matrix-free.
struct AsymmetricPair {
    LinearOperator X;
    LinearOperator Y;
    double scale = 1.0;  // s = 2n/d
};

inline AsymmetricPair build_xy(const RandomSplit& sp, Index n, double d) {
    require(sp.C1.rows() == sp.C2.rows() && sp.C1.cols() == sp.C2.cols(), "build_xy: split halves differ in shape");
    require(sp.C1.cols() == n, "build_xy: n does not match the split");
    require(d > 0, "build_xy: d must be positive");
    auto c1 = std::make_shared<const SparseMatrix>(sp.C1);
    auto c2 = std::make_shared<const SparseMatrix>(sp.C2);
    const double s = 2.0 * double(n) / d, s2 = s * s;
    AsymmetricPair p;
    p.scale = s;
    auto x = [c1, c2, s2](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        return V(s2 * c1->matvec(c2->matvec_transpose(v)));
    };
    auto xt = [c1, c2, s2](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        return V(s2 * c2->matvec(c1->matvec_transpose(v)));
    };
    auto y = [c1, c2, s2](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        return V(s2 * c2->matvec_transpose(c1->matvec(v)));
    };
    auto yt = [c1, c2, s2](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        return V(s2 * c1->matvec_transpose(c2->matvec(v)));
    };
    p.X = LinearOperator::from_generic(c1->rows(), c1->rows(), x, xt);
    p.Y = LinearOperator::from_generic(c1->cols(), c1->cols(), y, yt);
    return p;
}

using EigenBackend = std::function<EigenSolveReport(const LinearOperator&, int)>;

inline EigenBackend arnoldi_backend(const ArnoldiOptions& opt = {}) {
    return [opt](const LinearOperator& op, int k) { return top_eigenpairs(op, k, opt); };
}

/// Full dense eigendecomposition truncated to k (n ≤ 512).
inline EigenBackend dense_backend() {
    return [](const LinearOperator& op, int k) {
        auto all = dense_reference_eig(op.to_dense());
        EigenSolveReport rep;
        rep.bulk_radius_estimate = int(all.size()) > k ? std::abs(all[k].value) : 0.0;
        all.resize(std::min<std::size_t>(all.size(), std::size_t(k)));
        for (auto& p : all) p.converged = true;
        flag_clusters(all);
        rep.pairs = std::move(all);
        return rep;
    };
}

/// Top-k eigenpairs of the square observation A = (n/d) P⊙M.
inline EigenSolveReport square_spectrum(const SparseMatrix& A, int k, const ArnoldiOptions& opt = {}) {
    require(A.rows() == A.cols(), "square_spectrum: A must be square");
    return top_eigenpairs(as_operator(A), k, opt);
}

struct CorrelationEstimates {
    double c1_sim = 0.0, c2_sim = 0.0;
    double c1_avg = 0.0, c2_avg = 0.0;
};

/// ĉ from t_X = ⟨χ, χ′⟩ and t_Y = ⟨π, π′⟩.
inline CorrelationEstimates estimate_correlations(double t_x, double t_y) {
    auto clamp = [](double t) {
        const double a = std::abs(t);
        if (!(a <= 1.0 + 1e-6))
            throw NumericalConsistencyError("estimate_correlations: |<left,right>| = " + std::to_string(a) + " > 1");
        return std::min(a, 1.0);
    };
    const double a = clamp(t_x), b = clamp(t_y);
    CorrelationEstimates c;
    c.c1_sim = std::sqrt(a);
    c.c2_sim = std::sqrt(b);
    c.c1_avg = std::sqrt(2.0 * a / (1.0 + a));
    c.c2_avg = std::sqrt(2.0 * b / (1.0 + b));
    return c;
}

/// ŵ = √ν ĉ₁ ĉ₂; nullopt when ν is not a positive real.
inline std::optional<double> estimate_weights(cplx nu, const CorrelationEstimates& c, Method m) {
    if (!(nu.real() > 0.0) || std::abs(nu.imag()) > 1e-6 * std::abs(nu)) return std::nullopt;
    const double s = std::sqrt(nu.real());
    switch (m) {
        case Method::sim: return s * c.c1_sim * c.c2_sim;
        case Method::avg: return s * c.c1_avg * c.c2_avg;
        case Method::svd_baseline: return s;
    }
    return std::nullopt;
}

struct CompleteOptions {
    int rank = -1;  // r̂; -1 → number of admissible eigenvalues among max_rank
    int max_rank = 8;
    std::uint64_t seed = 1;
    bool parallel = true;
    EigenBackend backend;  // empty → Krylov–Schur with defaults
};

/// Per-index diagnostics of the asymmetric pipeline.
struct CompletionComponent {
    double nu = 0.0;   // eigenvalue of X
    double eta = 0.0;  // matched eigenvalue of Y
    double sigma_hat = 0.0;
    double t_x = 0.0;  // ⟨χ, χ′⟩
    double t_y = 0.0;  // ⟨π, π′⟩
    CorrelationEstimates c;
    double w_sim = 0.0, w_avg = 0.0;
    bool converged = true;
};

struct CompletedMatrix {
    Method method = Method::avg;
    int rank = 0;
    int requested_rank = 0;
    std::vector<double> weights;
    Mat left;   // m × r̂, ζ̂
    Mat right;  // n × r̂, ξ̂
    std::vector<CompletionComponent> components;
    std::vector<cplx> x_values, y_values;  // everything the solver returned
    double x_bulk_radius = 0.0;
    double y_bulk_radius = 0.0;
    std::vector<std::string> warnings;

    Vec apply(const Vec& v) const {
        Vec t = right.transpose() * v;
        for (int i = 0; i < rank; ++i) t[i] *= weights[i];
        return left * t;
    }
};

/// ‖L₁R₁ᵀ − L₂R₂ᵀ‖²_F in O((m+n) r²).
inline double factor_frobenius_error_sq(const Mat& l1, const Mat& r1, const Mat& l2, const Mat& r2) {
    const double a = ((l1.transpose() * l1).cwiseProduct(r1.transpose() * r1)).sum();
    const double b = ((l1.transpose() * l2).cwiseProduct(r1.transpose() * r2)).sum();
    const double c = ((l2.transpose() * l2).cwiseProduct(r2.transpose() * r2)).sum();
    return std::max(a - 2.0 * b + c, 0.0);
}

inline double frobenius_error_sq(const GroundTruth& gt, const CompletedMatrix& cm) {
    Mat lw = cm.left;
    for (int i = 0; i < cm.rank; ++i) lw.col(i) *= cm.weights[i];
    return factor_frobenius_error_sq(gt.left_scaled(), gt.right, lw, cm.right);
}

namespace detail {

inline bool admissible(const EigenPair& p, double bulk) {
    const cplx v = p.value;
    return std::abs(v.imag()) <= 1e-6 * std::abs(v) && v.real() > 0.0 && v.real() > bulk && !p.cluster &&
           !p.defective;
}

inline CompletedMatrix complete_svd(const SparseMatrix& T, double d, const CompleteOptions& opt) {
    const Index m = T.rows(), n = T.cols();
    const SparseMatrix A = T.scaled(double(n) / d);
    auto a = std::make_shared<const SparseMatrix>(A);
    // Gram operator on the smaller side
    const bool left_side = m <= n;
    const Index g = left_side ? m : n;
    auto gram_apply = [a, left_side](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if (left_side) return V(a->matvec(a->matvec_transpose(v)));
        return V(a->matvec_transpose(a->matvec(v)));
    };
    auto gram = LinearOperator::from_generic(g, g, gram_apply, gram_apply);
    const int k = std::min<int>(opt.rank > 0 ? opt.rank : opt.max_rank, int(g));
    ArnoldiOptions ao;
    ao.seed = opt.seed;
    ao.compute_left = false;
    auto rep = opt.backend ? opt.backend(gram, k) : top_eigenpairs(gram, k, ao);
    CompletedMatrix cm;
    cm.method = Method::svd_baseline;
    cm.requested_rank = k;
    cm.left = Mat::Zero(m, 0);
    cm.right = Mat::Zero(n, 0);
    std::vector<Vec> ls, rs;
    for (const auto& p : rep.pairs) {
        const double lam = p.value.real();
        if (!(lam > 0)) continue;
        const double s = std::sqrt(lam);
        Vec u, v;
        if (left_side) {
            u = p.right.real().normalized();
            v = A.matvec_transpose(u) / s;
        } else {
            v = p.right.real().normalized();
            u = A.matvec(v) / s;
        }
        ls.push_back(u.normalized());
        rs.push_back(v.normalized());
        cm.weights.push_back(s);
        CompletionComponent c;
        c.nu = c.eta = lam;
        c.sigma_hat = s;
        c.converged = p.converged;
        cm.components.push_back(c);
        cm.x_values.push_back(p.value);
    }
    cm.rank = static_cast<int>(cm.weights.size());
    if (opt.rank > 0 && cm.rank < opt.rank)
        cm.warnings.push_back("only " + std::to_string(cm.rank) + " positive singular values for requested rank " +
                              std::to_string(opt.rank));
    cm.left.resize(m, cm.rank);
    cm.right.resize(n, cm.rank);
    for (int i = 0; i < cm.rank; ++i) {
        cm.left.col(i) = ls[i];
        cm.right.col(i) = rs[i];
    }
    cm.x_bulk_radius = rep.bulk_radius_estimate;
    return cm;
}

}  // namespace detail

/// Randomized asymmetric completion. `T` is the unscaled P⊙M.
inline CompletedMatrix complete(const SparseMatrix& T, double d, Method method, const CompleteOptions& opt = {}) {
    require(d > 0, "complete: d must be positive");
    require(opt.rank != 0 && opt.rank >= -1, "complete: rank must be >= 1 (or -1 for automatic)");
    if (method == Method::svd_baseline) return detail::complete_svd(T, d, opt);

    const Index m = T.rows(), n = T.cols();
    const auto sp = split(T, opt.seed);
    const auto xy = build_xy(sp, n, d);
    const int rhat = opt.rank > 0 ? opt.rank : opt.max_rank;
    const int kx = std::min<int>(2 * rhat, int(m)), ky = std::min<int>(2 * rhat, int(n));

    EigenBackend backend = opt.backend;
    if (!backend) {
        ArnoldiOptions ao;
        ao.seed = opt.seed;
        backend = arnoldi_backend(ao);
    }
    EigenSolveReport rx, ry;
    if (opt.parallel) {
        auto fy = std::async(std::launch::async, [&] { return backend(xy.Y, ky); });
        rx = backend(xy.X, kx);
        ry = fy.get();
    } else {
        rx = backend(xy.X, kx);
        ry = backend(xy.Y, ky);
    }

    CompletedMatrix cm;
    cm.method = method;
    cm.requested_rank = opt.rank;
    for (const auto& p : rx.pairs) cm.x_values.push_back(p.value);
    for (const auto& p : ry.pairs) cm.y_values.push_back(p.value);
    cm.x_bulk_radius = rx.bulk_radius_estimate;
    cm.y_bulk_radius = ry.bulk_radius_estimate;

    std::vector<int> ax, ay;
    for (int i = 0; i < int(rx.pairs.size()); ++i)
        if (detail::admissible(rx.pairs[i], rx.bulk_radius_estimate)) ax.push_back(i);
    for (int i = 0; i < int(ry.pairs.size()); ++i)
        if (detail::admissible(ry.pairs[i], ry.bulk_radius_estimate)) ay.push_back(i);
    for (const auto& p : rx.pairs)
        if (p.cluster) {
            cm.warnings.push_back("clustered eigenvalues of X excluded");
            break;
        }
    std::vector<cplx> vx, vy;
    for (int i : ax) vx.push_back(rx.pairs[i].value);
    for (int i : ay) vy.push_back(ry.pairs[i].value);
    const auto match = greedy_match(vx, vy);

    const SparseMatrix A = T.scaled(double(n) / d);
    std::vector<Vec> ls, rs;
    for (std::size_t a = 0; a < ax.size() && int(ls.size()) < rhat; ++a) {
        if (match[a] < 0) continue;
        const EigenPair& px = rx.pairs[ax[a]];
        const EigenPair& py = ry.pairs[ay[match[a]]];
        CompletionComponent c;
        c.nu = px.value.real();
        c.eta = py.value.real();
        c.sigma_hat = std::sqrt(c.nu);
        c.t_x = px.left.dot(px.right).real();
        c.t_y = py.left.dot(py.right).real();
        c.c = estimate_correlations(c.t_x, c.t_y);
        c.w_sim = *estimate_weights(px.value, c.c, Method::sim);
        c.w_avg = *estimate_weights(px.value, c.c, Method::avg);
        c.converged = px.converged && py.converged;
        Vec chi = px.right.real(), chi_l = px.left.real();
        Vec pi = py.right.real(), pi_l = py.left.real();
        Vec zeta = method == Method::sim ? chi : Vec(chi + chi_l);
        Vec xi = method == Method::sim ? pi : Vec(pi + pi_l);
        zeta.normalize();
        xi.normalize();
        if (zeta.dot(A.matvec(xi)) < 0) xi = -xi;
        ls.push_back(zeta);
        rs.push_back(xi);
        cm.weights.push_back(method == Method::sim ? c.w_sim : c.w_avg);
        cm.components.push_back(c);
    }
    cm.rank = static_cast<int>(ls.size());
    if (opt.rank > 0 && cm.rank < opt.rank)
        cm.warnings.push_back("only " + std::to_string(cm.rank) + " admissible eigenvalues for requested rank " +
                              std::to_string(opt.rank));
    cm.left.resize(m, cm.rank);
    cm.right.resize(n, cm.rank);
    for (int i = 0; i < cm.rank; ++i) {
        cm.left.col(i) = ls[i];
        cm.right.col(i) = rs[i];
    }
    return cm;
}

/// Theoretical c's for index i from rectangular correlation tables.
struct TheoryCs {
    std::vector<double> c1, c2;
};

inline TheoryCs theory_cs(const CorrelationTables& t, Method m) {
    require(t.variant == Variant::rectangular, "theory_cs: rectangular tables required");
    TheoryCs c;
    for (int i = 0; i < t.count; ++i) {
        const double a = t.gamma_tri[i], b = t.gamma_nab[i];
        if (m == Method::sim) {
            c.c1.push_back(1.0 / std::sqrt(a));
            c.c2.push_back(1.0 / std::sqrt(b));
        } else {
            c.c1.push_back(std::sqrt(2.0 / (a + 1.0)));
            c.c2.push_back(std::sqrt(2.0 / (b + 1.0)));
        }
    }
    return c;
}

/// MSE★ = ‖P₀ − P̂‖²_F ≈ Σᵢ σᵢ²(1 − 2(c₁ᵢc₂ᵢ)²) + Σᵢⱼ σᵢσⱼ (c₁ᵢc₂ᵢ)(c₁ⱼc₂ⱼ) 𝔠₁ᵢⱼ 𝔠₂ᵢⱼ.
inline double mse_star(const GroundTruth& gt, const CorrelationTables& t, Method m) {
    require(m != Method::svd_baseline, "mse_star: defined for sim and avg");
    require(t.variant == Variant::rectangular, "mse_star: rectangular tables required");
    const int r = t.count;
    const auto c = theory_cs(t, m);
    Mat k1(r, r), k2(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            const double dl = i == j ? 1.0 : 0.0;
            if (m == Method::sim) {
                k1(i, j) = t.Gamma_tri(i, j) / std::sqrt(t.gamma_tri[i] * t.gamma_tri[j]);
                k2(i, j) = t.Gamma_nab(i, j) / std::sqrt(t.gamma_nab[i] * t.gamma_nab[j]);
            } else {
                k1(i, j) = (t.Gamma_tri(i, j) + dl) / std::sqrt((t.gamma_tri[i] + 1) * (t.gamma_tri[j] + 1));
                k2(i, j) = (t.Gamma_nab(i, j) + dl) / std::sqrt((t.gamma_nab[i] + 1) * (t.gamma_nab[j] + 1));
            }
        }
    double out = 0.0;
    for (int i = 0; i < r; ++i) out += gt.sigma[i] * gt.sigma[i] * (1.0 - 2.0 * std::pow(c.c1[i] * c.c2[i], 2));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            out += gt.sigma[i] * gt.sigma[j] * (c.c1[i] * c.c2[i]) * (c.c1[j] * c.c2[j]) * k1(i, j) * k2(i, j);
    return out;
}

}  // namespace spc
