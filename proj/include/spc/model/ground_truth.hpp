#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "spc/core/errors.hpp"
#include "spc/core/rng.hpp"
#include "spc/core/types.hpp"

namespace spc {

enum class SamplerKind { gaussian, uniform, laplace, hyperbolic_secant, bernoulli, rademacher, constant };

struct Sampler {
    SamplerKind kind = SamplerKind::gaussian;
    double param = 0.5;  // success probability c for bernoulli

    std::string name() const {
        switch (kind) {
            case SamplerKind::gaussian: return "gaussian";
            case SamplerKind::uniform: return "uniform";
            case SamplerKind::laplace: return "laplace";
            case SamplerKind::hyperbolic_secant: return "hyperbolic_secant";
            case SamplerKind::bernoulli: return "bernoulli";
            case SamplerKind::rademacher: return "rademacher";
            case SamplerKind::constant: return "constant";
        }
        return "?";
    }

    /// Non-centered kurtosis E[B^4]/E[B^2]^2, the limit of n|φ|₄⁴.
    double kurtosis() const {
        switch (kind) {
            case SamplerKind::gaussian: return 3.0;
            case SamplerKind::uniform: return 9.0 / 5.0;
            case SamplerKind::laplace: return 6.0;
            case SamplerKind::hyperbolic_secant: return 5.0;
            case SamplerKind::bernoulli: return 1.0 / param;
            case SamplerKind::rademacher: return 1.0;
            case SamplerKind::constant: return 1.0;
        }
        return 0.0;
    }

    double draw(Rng& rng) const {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        switch (kind) {
            case SamplerKind::gaussian: return std::normal_distribution<double>()(rng);
            case SamplerKind::uniform: return u01(rng);
            case SamplerKind::laplace: {
                const double e = std::exponential_distribution<double>(1.0)(rng);
                return u01(rng) < 0.5 ? -e : e;
            }
            case SamplerKind::hyperbolic_secant: {
                double u = u01(rng);
                while (u == 0.0) u = u01(rng);
                return (2.0 / std::numbers::pi) * std::log(std::tan(std::numbers::pi * u / 2.0));
            }
            case SamplerKind::bernoulli: return u01(rng) < param ? 1.0 : 0.0;
            case SamplerKind::rademacher: return u01(rng) < 0.5 ? -1.0 : 1.0;
            case SamplerKind::constant: return 1.0;
        }
        return 0.0;
    }

    static Sampler parse(const std::string& s) {
        Sampler out;
        std::string base = s;
        const auto lp = s.find('(');
        if (lp != std::string::npos) {
            base = s.substr(0, lp);
            const auto rp = s.find(')', lp);
            require(rp != std::string::npos, "sampler: missing ')' in '" + s + "'");
            out.param = std::stod(s.substr(lp + 1, rp - lp - 1));
        }
        if (base == "gaussian" || base == "normal") out.kind = SamplerKind::gaussian;
        else if (base == "uniform") out.kind = SamplerKind::uniform;
        else if (base == "laplace") out.kind = SamplerKind::laplace;
        else if (base == "hyperbolic_secant") out.kind = SamplerKind::hyperbolic_secant;
        else if (base == "bernoulli") out.kind = SamplerKind::bernoulli;
        else if (base == "rademacher") out.kind = SamplerKind::rademacher;
        else if (base == "constant") out.kind = SamplerKind::constant;
        else throw ContractViolation("unknown sampler '" + s + "'");
        if (out.kind == SamplerKind::bernoulli)
            require(out.param > 0 && out.param <= 1, "sampler: bernoulli parameter must be in (0,1]");
        return out;
    }

    std::string label() const {
        return kind == SamplerKind::bernoulli ? "bernoulli(" + std::to_string(param) + ")" : name();
    }
};

/// @brief Low-rank hidden matrix P = Σ σₖ ζₖ ξₖᵀ.
///
/// For a symmetric truth, ξₖ = φₖ and ζₖ = sign(μₖ) φₖ so that
/// P = Σ μₖ φₖ φₖᵀ with μₖ = sign(μₖ) σₖ.
struct GroundTruth {
    Index m = 0;
    Index n = 0;
    std::vector<double> sigma;
    Mat left;   // m x r, columns ζₖ
    Mat right;  // n x r, columns ξₖ
    bool symmetric = false;
    std::vector<int> eigen_signs;
    Sampler sampler;
    std::uint64_t seed = 0;

    Index rank() const { return static_cast<Index>(sigma.size()); }

    /// Signed eigenvalues μₖ (symmetric truth only).
    std::vector<double> mu() const {
        require(symmetric, "mu: ground truth is not symmetric");
        std::vector<double> out(sigma.size());
        for (std::size_t k = 0; k < sigma.size(); ++k) out[k] = eigen_signs[k] * sigma[k];
        return out;
    }

    /// Eigenvector φₖ (symmetric truth only).
    Vec phi(Index k) const {
        require(symmetric, "phi: ground truth is not symmetric");
        return right.col(k);
    }

    /// ζ scaled by σ, m x r.
    Mat left_scaled() const {
        Mat l = left;
        for (Index k = 0; k < rank(); ++k) l.col(k) *= sigma[k];
        return l;
    }

    double entry(Index x, Index y) const {
        double s = 0.0;
        for (Index k = 0; k < rank(); ++k) s += sigma[k] * left(x, k) * right(y, k);
        return s;
    }

    Mat dense() const {
        require(m * n <= Index(16) * 1024 * 1024, "GroundTruth::dense: matrix too large");
        return left_scaled() * right.transpose();
    }

    /// P v without forming P.
    Vec apply(const Vec& v) const { return left_scaled() * (right.transpose() * v); }
    Vec apply_transpose(const Vec& u) const { return right * (left_scaled().transpose() * u); }

    double frobenius_norm_sq() const {
        double s = 0.0;
        for (double x : sigma) s += x * x;
        return s;
    }
};

struct GroundTruthSpec {
    Index m = 0;
    Index n = 0;
    std::vector<double> values;  // σ (rectangular) or signed μ (symmetric)
    bool symmetric = false;
    Sampler sampler;
};

namespace detail {

inline Mat sample_orthonormal(Index len, Index r, const Sampler& s, Rng& rng) {
    Mat q(len, r);
    for (Index k = 0; k < r; ++k) {
        Vec v(len);
        for (Index i = 0; i < len; ++i) v[i] = s.draw(rng);
        for (int pass = 0; pass < 2; ++pass)
            for (Index j = 0; j < k; ++j) v -= q.col(j).dot(v) * q.col(j);
        const double nv = v.norm();
        if (!(nv > 1e-10 * std::sqrt(double(len))))
            throw ContractViolation("generate_ground_truth: sampler produced a degenerate vector (rank too large "
                                    "for this sampler?)");
        q.col(k) = v / nv;
    }
    return q;
}

}  // namespace detail

/// Vectors are i.i.d. sampler draws, Gram–Schmidt orthonormalized in index order.
/// Random stream: left vectors first, then right vectors, from
/// make_rng(seed, stream::ground_truth).
inline GroundTruth generate_ground_truth(const GroundTruthSpec& spec, std::uint64_t seed) {
    require(spec.m >= 2 && spec.n >= 2, "generate_ground_truth: need m, n >= 2");
    require(!spec.values.empty(), "generate_ground_truth: empty value list");
    const Index r = static_cast<Index>(spec.values.size());
    require(r <= std::min(spec.m, spec.n), "generate_ground_truth: rank exceeds min(m, n)");
    if (spec.symmetric) require(spec.m == spec.n, "generate_ground_truth: symmetric truth needs m == n");

    GroundTruth gt;
    gt.m = spec.m;
    gt.n = spec.n;
    gt.symmetric = spec.symmetric;
    gt.sampler = spec.sampler;
    gt.seed = seed;

    std::vector<double> vals = spec.values;
    for (double v : vals) require(v != 0.0 && std::isfinite(v), "generate_ground_truth: values must be nonzero");
    if (!spec.symmetric)
        for (double v : vals) require(v > 0.0, "generate_ground_truth: singular values must be positive");
    std::stable_sort(vals.begin(), vals.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });

    Rng rng = make_rng(seed, stream::ground_truth);
    if (spec.symmetric) {
        gt.right = detail::sample_orthonormal(spec.n, r, spec.sampler, rng);
        gt.left = gt.right;
        for (Index k = 0; k < r; ++k) {
            gt.sigma.push_back(std::abs(vals[k]));
            gt.eigen_signs.push_back(vals[k] > 0 ? 1 : -1);
            if (vals[k] < 0) gt.left.col(k) *= -1.0;
        }
    } else {
        gt.left = detail::sample_orthonormal(spec.m, r, spec.sampler, rng);
        gt.right = detail::sample_orthonormal(spec.n, r, spec.sampler, rng);
        gt.sigma = vals;
    }
    return gt;
}

/// Symmetric truth from explicit orthonormal eigenvectors (columns of phi).
inline GroundTruth symmetric_truth(const Mat& phi, const std::vector<double>& mu) {
    require(phi.cols() == static_cast<Index>(mu.size()), "symmetric_truth: size mismatch");
    GroundTruth gt;
    gt.m = gt.n = phi.rows();
    gt.symmetric = true;
    gt.sampler.kind = SamplerKind::constant;
    std::vector<Index> order(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) order[i] = static_cast<Index>(i);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(mu[a]) > std::abs(mu[b]); });
    gt.right.resize(phi.rows(), phi.cols());
    gt.left.resize(phi.rows(), phi.cols());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double v = mu[order[k]];
        require(v != 0.0, "symmetric_truth: zero eigenvalue");
        gt.right.col(k) = phi.col(order[k]);
        gt.left.col(k) = (v > 0 ? 1.0 : -1.0) * phi.col(order[k]);
        gt.sigma.push_back(std::abs(v));
        gt.eigen_signs.push_back(v > 0 ? 1 : -1);
    }
    return gt;
}

/// The ER model P = J/n: rank one, μ = 1, φ = 1/√n.
inline GroundTruth erdos_renyi_truth(Index n) {
    return symmetric_truth(Mat::Constant(n, 1, 1.0 / std::sqrt(double(n))), {1.0});
}

/// P = μ₁ φ₁φ₁ᵀ + μ₂ φ₂φ₂ᵀ with φ₁ = 1/√n and φ₂ = ±1/√n on two equal halves.
/// With μ₁ = a+b and μ₂ = a−b this is the two-block matrix with entries
/// 2a/n on the diagonal blocks and 2b/n off them.
inline GroundTruth two_block_truth(Index n, double mu1, double mu2) {
    require(n % 2 == 0, "two_block_truth: n must be even");
    Mat phi(n, 2);
    const double s = 1.0 / std::sqrt(double(n));
    for (Index i = 0; i < n; ++i) {
        phi(i, 0) = s;
        phi(i, 1) = i < n / 2 ? s : -s;
    }
    return symmetric_truth(phi, {mu1, mu2});
}

}  // namespace spc
