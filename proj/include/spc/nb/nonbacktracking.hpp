#pragma once

#include <algorithm>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "spc/core/arnoldi.hpp"
#include "spc/core/errors.hpp"
#include "spc/core/linear_operator.hpp"
#include "spc/core/sparse_matrix.hpp"
#include "spc/model/correlation.hpp"
#include "spc/model/ground_truth.hpp"
#include "spc/model/mask.hpp"
#include "spc/model/profile.hpp"

namespace spc {

/// Directed edges of a symmetric mask, indexed in lexicographic (tail, head)
/// order. Edges with tail x occupy [out_ptr[x], out_ptr[x+1]).
struct EdgeSet {
    Index n = 0;
    std::vector<std::pair<Index, Index>> edges;
    std::vector<Index> rev;      // e ↦ ē
    std::vector<Index> out_ptr;  // size n+1
    std::vector<Index> degree;   // loops count twice
    Index loops = 0;

    Index size() const { return Index(edges.size()); }
    Index tail(Index e) const { return edges[e].first; }
    Index head(Index e) const { return edges[e].second; }

    /// Edges (x, y) entering y; they are the reverses of the edges leaving y.
    std::vector<Index> incoming(Index y) const {
        std::vector<Index> in;
        for (Index f = out_ptr[y]; f < out_ptr[y + 1]; ++f) in.push_back(rev[f]);
        return in;
    }
};

inline EdgeSet build_edge_set(Index n, std::vector<std::pair<Index, Index>> pairs) {
    require(n >= 0, "build_edge_set: negative dimension");
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    EdgeSet es;
    es.n = n;
    es.edges = std::move(pairs);
    es.out_ptr.assign(n + 1, 0);
    es.degree.assign(n, 0);
    for (auto [x, y] : es.edges) {
        require(x >= 0 && x < n && y >= 0 && y < n, "build_edge_set: index out of range");
        ++es.out_ptr[x + 1];
        es.degree[x] += x == y ? 2 : 1;
        if (x == y) ++es.loops;
    }
    for (Index x = 0; x < n; ++x) es.out_ptr[x + 1] += es.out_ptr[x];
    es.rev.resize(es.edges.size());
    for (Index e = 0; e < es.size(); ++e) {
        auto [x, y] = es.edges[e];
        auto first = es.edges.begin() + es.out_ptr[y], last = es.edges.begin() + es.out_ptr[y + 1];
        auto it = std::lower_bound(first, last, std::make_pair(y, x));
        if (it == last || *it != std::make_pair(y, x))
            throw ContractViolation("build_edge_set: mask is not symmetric");
        es.rev[e] = Index(it - es.edges.begin());
    }
    return es;
}

inline EdgeSet build_edge_set(const MaskSample& mask) {
    require(mask.m == mask.n, "build_edge_set: mask must be square");
    return build_edge_set(mask.n, mask.revealed);
}

/// Block mask (0 M; Mᵀ 0) on m+n vertices.
inline MaskSample symmetrize_rect_mask(const MaskSample& mask) {
    MaskSample out{mask.m + mask.n, mask.m + mask.n, mask.d, mask.seed, true, {}};
    out.revealed.reserve(2 * mask.revealed.size());
    for (auto [x, y] : mask.revealed) {
        out.revealed.push_back({x, mask.m + y});
        out.revealed.push_back({mask.m + y, x});
    }
    std::sort(out.revealed.begin(), out.revealed.end());
    return out;
}

/// Weighted non-backtracking operator, B_{e,f} = w_f 1{a=y} 1{x≠b}
/// for e = (x,y), f = (a,b), with w_f = (n/d̄) P_{a,b}.
struct NBOperator {
    std::shared_ptr<const EdgeSet> es;
    Vec w;
    double dbar = 1.0;

    Index dim() const { return es->size(); }

    template <class V>
    V apply(const V& v) const {
        require(v.size() == dim(), "nb_apply: edge vector length mismatch");
        using S = typename V::Scalar;
        const EdgeSet& E = *es;
        std::vector<S> s(E.n, S(0));
        for (Index y = 0; y < E.n; ++y)
            for (Index f = E.out_ptr[y]; f < E.out_ptr[y + 1]; ++f) s[y] += w[f] * v[f];
        V out(dim());
        for (Index e = 0; e < dim(); ++e) {
            const Index r = E.rev[e];
            out[e] = s[E.head(e)] - w[r] * v[r];
        }
        return out;
    }

    template <class V>
    V apply_transpose(const V& u) const {
        require(u.size() == dim(), "nb_apply: edge vector length mismatch");
        using S = typename V::Scalar;
        const EdgeSet& E = *es;
        std::vector<S> in(E.n, S(0));
        for (Index e = 0; e < dim(); ++e) in[E.head(e)] += u[e];
        V out(dim());
        for (Index f = 0; f < dim(); ++f) out[f] = w[f] * (in[E.tail(f)] - u[E.rev[f]]);
        return out;
    }

    LinearOperator as_linear_operator() const {
        auto self = std::make_shared<const NBOperator>(*this);
        return LinearOperator::from_generic(
            dim(), dim(), [self](const auto& x) { return self->apply(x); },
            [self](const auto& x) { return self->apply_transpose(x); });
    }

    Mat dense() const {
        Mat b = Mat::Zero(dim(), dim());
        for (Index e = 0; e < dim(); ++e)
            for (Index f = es->out_ptr[es->head(e)]; f < es->out_ptr[es->head(e) + 1]; ++f)
                if (es->head(f) != es->tail(e)) b(e, f) = w[f];
        return b;
    }
};

template <class Weight>
NBOperator make_nb_operator(EdgeSet es, double dbar, Weight weight) {
    require(dbar > 0, "nb operator: dbar must be positive");
    NBOperator op;
    op.dbar = dbar;
    op.w.resize(es.size());
    const double s = double(es.n) / dbar;
    for (Index e = 0; e < es.size(); ++e) op.w[e] = s * weight(es.tail(e), es.head(e));
    op.es = std::make_shared<const EdgeSet>(std::move(es));
    return op;
}

/// From a symmetric truth and a symmetric mask on the same vertex set.
inline NBOperator nb_operator(const GroundTruth& gt, const MaskSample& mask, double dbar) {
    require(gt.m == gt.n && mask.n == gt.n, "nb_operator: dimension mismatch");
    return make_nb_operator(build_edge_set(mask), dbar, [&](Index x, Index y) { return gt.entry(x, y); });
}

/// From observed symmetric entries P ⊙ M̄; the pattern is the mask.
inline NBOperator nb_operator(const SparseMatrix& T, double dbar) {
    require(T.rows() == T.cols(), "nb_operator: observation must be square");
    std::vector<std::pair<Index, Index>> pairs;
    for (const auto& t : T.triplets()) pairs.push_back({t.row, t.col});
    auto es = build_edge_set(T.rows(), std::move(pairs));
    return make_nb_operator(std::move(es), dbar, [&](Index x, Index y) { return T.coeff(x, y); });
}

/// φ⁺(x,y) = φ(y)/√d̄, φ⁻(x,y) = φ(x)/√d̄.
inline std::pair<Vec, Vec> lift_edge(const Vec& phi, double dbar, const EdgeSet& es) {
    require(phi.size() == es.n, "lift_edge: vertex vector length mismatch");
    const double s = 1.0 / std::sqrt(dbar);
    Vec plus(es.size()), minus(es.size());
    for (Index e = 0; e < es.size(); ++e) {
        plus[e] = s * phi[es.head(e)];
        minus[e] = s * phi[es.tail(e)];
    }
    return {plus, minus};
}

struct LoweredVectors {
    Vec check;       // (1/d) Σ_{x:(x,y)∈E} ψ(x,y)
    Vec hat;         // same sum over d(deg(y)−1), zero when deg(y) ≤ 1
    Vec check_unit;  // zero vector when check is zero
    Vec hat_unit;
};

inline LoweredVectors lower(const Vec& psi, const EdgeSet& es, double d) {
    require(psi.size() == es.size(), "lower: edge vector length mismatch");
    LoweredVectors lv;
    lv.check = Vec::Zero(es.n);
    for (Index e = 0; e < es.size(); ++e) lv.check[es.head(e)] += psi[e];
    lv.check /= d;
    lv.hat = Vec::Zero(es.n);
    for (Index y = 0; y < es.n; ++y)
        if (es.degree[y] > 1) lv.hat[y] = lv.check[y] / double(es.degree[y] - 1);
    auto unit = [](const Vec& v) { return v.norm() > 0 ? Vec(v / v.norm()) : v; };
    lv.check_unit = unit(lv.check);
    lv.hat_unit = unit(lv.hat);
    return lv;
}

struct NBPredictions {
    double dbar = 0.0;
    double threshold = 0.0;  // ϑ̄ = max(L/d̄, √(ρ/d̄))
    int r0 = 0;
    std::vector<double> gamma;
    std::vector<double> gamma_hat;
    std::vector<double> lr_dot;  // 1/√(γγ̂)
    double c_min_eig = 0.0;      // smallest eigenvalue of C, diagnostic only
};

/// C_ij = ⟨1, Q φᵢ⊙φⱼ⟩/(μᵢμⱼ) using the row sums of Q = n P⊙P.
inline Mat nb_c_matrix(const GroundTruth& gt, int count) {
    require(gt.symmetric, "nb_c_matrix: symmetric truth required");
    const Index n = gt.n;
    Vec q = Vec::Zero(n);
    for (int k = 0; k < gt.rank(); ++k) q += gt.sigma[k] * gt.sigma[k] * gt.right.col(k).cwiseAbs2();
    q *= double(n);
    const auto mu = gt.mu();
    Mat c(count, count);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < count; ++j)
            c(i, j) = (q.array() * gt.phi(i).array() * gt.phi(j).array()).sum() / (mu[i] * mu[j]);
    return c;
}

inline NBPredictions nb_predictions(const GroundTruth& gt, double dbar, SeriesOptions opt = {}) {
    const auto prof = detection_profile(gt, dbar, Variant::nb);
    const auto tab = correlation_tables(gt, prof, opt);
    NBPredictions p;
    p.dbar = dbar;
    p.threshold = prof.theta;
    p.r0 = prof.r0;
    p.gamma = tab.gamma;
    p.gamma_hat = tab.gamma_hat;
    for (std::size_t i = 0; i < tab.gamma.size(); ++i) p.lr_dot.push_back(1.0 / std::sqrt(tab.gamma[i] * tab.gamma_hat[i]));
    if (tab.count > 0) {
        Eigen::SelfAdjointEigenSolver<Mat> es(nb_c_matrix(gt, tab.count));
        p.c_min_eig = es.eigenvalues().minCoeff();
    }
    return p;
}

struct NBPairLowered {
    Vec phi_hat;    // right divergence of the right eigenvector, unit
    Vec phi_check;  // left divergence of the left eigenvector, unit
    double hat_check_overlap = 0.0;
};

struct NBSpectrum {
    EigenSolveReport report;
    std::vector<NBPairLowered> lowered;  // empty entries for non-real pairs
    std::vector<bool> admissible;
};

inline NBSpectrum nb_spectrum(const NBOperator& op, int k, ArnoldiOptions opt = {}) {
    require(k >= 1, "nb_spectrum: k >= 1");
    NBSpectrum s;
    s.report = top_eigenpairs(op.as_linear_operator(), k, opt);
    const double bulk = s.report.bulk_radius_estimate;
    for (const auto& p : s.report.pairs) {
        NBPairLowered lw;
        const bool real = p.value.imag() == 0.0;
        if (real) {
            lw.phi_hat = lower(p.right.real(), *op.es, op.dbar).hat_unit;
            if (p.left.size() > 0) lw.phi_check = lower(p.left.real(), *op.es, op.dbar).check_unit;
            if (lw.phi_check.size() > 0) lw.hat_check_overlap = std::abs(lw.phi_hat.dot(lw.phi_check));
        }
        s.lowered.push_back(std::move(lw));
        s.admissible.push_back(real && p.value.real() > 0 && p.value.real() > bulk && !p.cluster && !p.defective);
    }
    return s;
}

}  // namespace spc
