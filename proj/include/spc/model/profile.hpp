#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "spc/core/errors.hpp"
#include "spc/model/ground_truth.hpp"

namespace spc {

enum class Variant { square, nb, rectangular };

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::square: return "square";
        case Variant::nb: return "nb";
        case Variant::rectangular: return "rectangular";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "square") return Variant::square;
    if (s == "nb") return Variant::nb;
    if (s == "rectangular" || s == "rect") return Variant::rectangular;
    throw ContractViolation("unknown variant '" + s + "' (square | nb | rectangular)");
}

/// @brief Q = n P⊙P (square) or Q̃ = ñ P̃⊙P̃ (rectangular), matrix-free.
///
/// P⊙P = Σₖₗ σₖσₗ (ζₖ⊙ζₗ)(ξₖ⊙ξₗ)ᵀ is applied through its r² rank-one
/// terms when r² ≤ 64, otherwise through an explicit dense P⊙P.
class VarianceOperator {
public:
    VarianceOperator(const GroundTruth& gt, bool hermitized) : m_(gt.m), n_(gt.n), herm_(hermitized) {
        scale_ = hermitized ? double(gt.m + gt.n) : double(gt.n);
        const Index r = gt.rank();
        if (r * r <= 64) {
            lz_.resize(gt.m, r * r);
            rx_.resize(gt.n, r * r);
            for (Index k = 0; k < r; ++k)
                for (Index l = 0; l < r; ++l) {
                    lz_.col(k * r + l) = gt.sigma[k] * gt.sigma[l] * gt.left.col(k).cwiseProduct(gt.left.col(l));
                    rx_.col(k * r + l) = gt.right.col(k).cwiseProduct(gt.right.col(l));
                }
        } else {
            require(gt.m <= 4000 && gt.n <= 4000, "VarianceOperator: explicit Q limited to m, n <= 4000");
            dense_ = std::make_shared<Mat>(gt.dense().cwiseAbs2());
        }
    }

    Index dim() const { return herm_ ? m_ + n_ : n_; }
    Index rows() const { return m_; }
    Index cols() const { return n_; }
    bool hermitized() const { return herm_; }
    double scale() const { return scale_; }

    /// (P⊙P) v, v of length n.
    Vec k_apply(const Vec& v) const { return dense_ ? Vec(*dense_ * v) : Vec(lz_ * (rx_.transpose() * v)); }
    /// (P⊙P)ᵀ u, u of length m.
    Vec k_apply_t(const Vec& u) const {
        return dense_ ? Vec(dense_->transpose() * u) : Vec(rx_ * (lz_.transpose() * u));
    }

    Vec apply(const Vec& v) const {
        require(v.size() == dim(), "VarianceOperator::apply: dimension mismatch");
        if (!herm_) {
            require(m_ == n_, "VarianceOperator: square variant needs a square truth");
            return scale_ * k_apply(v);
        }
        Vec out(m_ + n_);
        out.head(m_) = scale_ * k_apply(v.tail(n_));
        out.tail(n_) = scale_ * k_apply_t(v.head(m_));
        return out;
    }

private:
    Index m_, n_;
    bool herm_;
    double scale_ = 1.0;
    Mat lz_, rx_;
    std::shared_ptr<Mat> dense_;
};

struct PerronResult {
    double value = 0.0;
    Vec vector;
    int iterations = 0;
    bool converged = false;
};

/// Perron root of a symmetric entrywise non-negative operator by power
/// iteration on S + cI, c = mean row sum, which removes any −ρ competitor.
template <class Apply>
PerronResult perron_power_iteration(Apply&& apply, Index dim, double tol = 1e-8, int max_iter = 10000) {
    PerronResult res;
    Vec x = Vec::Constant(dim, 1.0 / std::sqrt(double(dim)));
    const double c = std::max(apply(x).sum() / std::sqrt(double(dim)), 0.0);
    for (int it = 1; it <= max_iter; ++it) {
        Vec y = apply(x);
        const double theta = x.dot(y);
        const double resid = (y - theta * x).norm();
        res.value = theta;
        res.iterations = it;
        if (resid <= tol * std::max(std::abs(theta), 1e-300)) {
            res.converged = true;
            break;
        }
        y += c * x;
        const double ny = y.norm();
        if (ny == 0.0) {
            res.value = 0.0;
            res.converged = true;
            break;
        }
        x = y / ny;
    }
    res.vector = x;
    return res;
}

/// @brief Theory quantities derived from (P, d) for one variant.
struct DetectionProfile {
    Variant variant = Variant::square;
    double d = 0.0;       // the caller's d (d̄ for nb)
    double d_used = 0.0;  // d, d̄, or d̃ = (1+α)d/2
    Index n_used = 0;     // n, or ñ = m+n
    double D = 0.0;
    double L = 0.0;
    double rho = 0.0;
    double rho_base = 0.0;  // rectangular only: n‖P⊙P‖, so rho = (1+α) rho_base
    bool rho_converged = false;
    int rho_iterations = 0;
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta = 0.0;
    int r0 = 0;
    double tau0 = std::numeric_limits<double>::quiet_NaN();
    int ell = 0;
    std::vector<double> values;      // μ (signed) or σ
    std::vector<double> gap_ratios;  // τ_{i,ℓ}, i < r0
    double b = 0.0;      // incoherence √n maxₖ |φₖ|_∞
    double b_row = 0.0;  // √n max_x |(φₖ(x))ₖ|₂ ≥ b, gives L ≤ |μ₁| b_row² for any rank
};

inline int compute_ell(double D, double n_used) {
    return static_cast<int>(std::floor(std::log(n_used) / std::log(D) / 8.0));
}

/// τ_{i,ℓ} = 1 − min_{j≠i} |1 − (λⱼ/λᵢ)^ℓ| over the full spectrum `all`
/// (zero eigenvalues included when the rank is below the dimension).
inline double gap_ratio(const std::vector<double>& all, std::size_t i, int ell, bool has_zero) {
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < all.size(); ++j)
        if (j != i) mn = std::min(mn, std::abs(1.0 - std::pow(all[j] / all[i], ell)));
    if (has_zero) mn = std::min(mn, ell == 0 ? 0.0 : 1.0);
    return 1.0 - mn;
}

inline DetectionProfile detection_profile(const GroundTruth& gt, double d, Variant variant) {
    require(d > 0, "detection_profile: d must be positive");
    DetectionProfile p;
    p.variant = variant;
    p.d = d;
    const Mat ls = gt.left_scaled();

    double maxabs = 0.0;
    for (Index x = 0; x < gt.m; ++x) maxabs = std::max(maxabs, (gt.right * ls.row(x).transpose()).cwiseAbs().maxCoeff());

    if (variant == Variant::rectangular) {
        const double alpha = double(gt.m) / double(gt.n);
        p.n_used = gt.m + gt.n;
        p.d_used = (1.0 + alpha) * d / 2.0;
        p.D = std::max(2.0 * p.d_used, 1.01);
        p.values = gt.sigma;
        VarianceOperator q(gt, false);
        // ‖P⊙P‖² is the Perron root of (P⊙P)(P⊙P)ᵀ
        auto pr = perron_power_iteration([&](const Vec& u) { return Vec(q.k_apply(q.k_apply_t(u))); }, gt.m, 1e-10);
        const double knorm = std::sqrt(std::max(pr.value, 0.0));
        p.rho = double(p.n_used) * knorm;
        p.rho_base = double(gt.n) * knorm;
        p.rho_converged = pr.converged;
        p.rho_iterations = pr.iterations;
        double rowmax = 0.0;
        for (Index x = 0; x < gt.m; ++x) rowmax = std::max(rowmax, gt.left.row(x).squaredNorm() / 2.0);
        for (Index y = 0; y < gt.n; ++y) rowmax = std::max(rowmax, gt.right.row(y).squaredNorm() / 2.0);
        p.b_row = std::sqrt(double(p.n_used) * rowmax);
        const double emax = std::max(gt.left.cwiseAbs().maxCoeff(), gt.right.cwiseAbs().maxCoeff());
        p.b = std::sqrt(double(p.n_used) / 2.0) * emax;
    } else {
        require(gt.symmetric, "detection_profile: square and nb variants need a symmetric truth");
        p.n_used = gt.n;
        p.d_used = d;
        p.D = variant == Variant::nb ? std::max(d, 1.01) : std::max(2.0 * d, 1.01);
        p.values = gt.mu();
        VarianceOperator q(gt, false);
        auto pr = perron_power_iteration([&](const Vec& v) { return q.apply(v); }, gt.n);
        p.rho = pr.value;
        p.rho_base = pr.value;
        p.rho_converged = pr.converged;
        p.rho_iterations = pr.iterations;
        double rowmax = 0.0;
        for (Index x = 0; x < gt.n; ++x) rowmax = std::max(rowmax, gt.right.row(x).squaredNorm());
        p.b_row = std::sqrt(double(gt.n) * rowmax);
        p.b = std::sqrt(double(gt.n)) * gt.right.cwiseAbs().maxCoeff();
    }

    p.L = double(p.n_used) * maxabs;
    p.theta1 = p.L / p.d_used;
    p.theta2 = std::sqrt(p.rho / p.d_used);
    p.theta = std::max(p.theta1, p.theta2);
    p.ell = compute_ell(p.D, double(p.n_used));
    p.r0 = 0;
    for (double v : p.values)
        if (std::abs(v) > p.theta) ++p.r0;
    if (p.r0 > 0) p.tau0 = p.theta / std::abs(p.values[p.r0 - 1]);

    std::vector<double> spectrum = p.values;
    if (variant == Variant::rectangular)
        for (double s : gt.sigma) spectrum.push_back(-s);
    const bool has_zero = Index(spectrum.size()) < p.n_used;
    for (int i = 0; i < p.r0; ++i) p.gap_ratios.push_back(gap_ratio(spectrum, i, p.ell, has_zero));
    return p;
}

}  // namespace spc
