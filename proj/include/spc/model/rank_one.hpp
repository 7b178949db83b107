#pragma once

#include <cmath>

#include "spc/core/errors.hpp"
#include "spc/model/ground_truth.hpp"

namespace spc {

/// Inputs in kurtosis units: kurt_left = m|ζ|₄⁴, kurt_right = n|ξ|₄⁴
/// (both → Kurt_B for i.i.d. entries). alpha = m/n.
struct RankOneInputs {
    double kurt_left = 3.0;
    double kurt_right = 3.0;
    double alpha = 1.0;
    double d = 1.0;
    double dbar = 0.0;  // NB degree; 0 → d
    double sigma = 1.0;
};

struct RankOnePredictions {
    // symmetric n×n, P = μφφᵀ with n|φ|₄⁴ = kurt_right
    double threshold_d_crit = 0.0;  // d at which ϑ₂ = |μ|
    double theta2 = 0.0;            // in units of |μ|
    bool below_threshold = false;
    double gamma = 0.0;
    double overlap_sim = 0.0;  // |⟨ψ, φ⟩|
    double overlap_avg = 0.0;  // averaged left/right vector
    double lr_dot = 0.0;       // ⟨ψ, ψ′⟩
    bool nb_below_threshold = false;
    double nb_lr_dot = 0.0;
    double nb_gamma_hat_ratio = 0.0;  // γ̂/γ = ρ/μ²
    // rectangular m×n via Hermitization
    double threshold_d_crit_rect = 0.0;
    bool rect_below_threshold = false;
    double gamma_rect = 0.0;
    double gamma_tri = 0.0;
    double gamma_nab = 0.0;
    double c1_sim = 0.0, c2_sim = 0.0;
    double c1_avg = 0.0, c2_avg = 0.0;
    double mse_sim = 0.0;
    double mse_avg = 0.0;
};

inline RankOnePredictions rank_one_predictions(const RankOneInputs& in) {
    require(in.d > 0 && in.alpha > 0 && in.kurt_left > 0 && in.kurt_right > 0,
            "rank_one_predictions: d, alpha and kurtosis must be positive");
    RankOnePredictions p;
    const double k = in.kurt_right;
    const double dbar = in.dbar > 0 ? in.dbar : in.d;

    p.threshold_d_crit = k;
    p.theta2 = std::sqrt(k / in.d);
    p.below_threshold = in.d <= k;
    if (!p.below_threshold) {
        p.gamma = 1.0 / (1.0 - k / in.d);
        p.overlap_sim = 1.0 / std::sqrt(p.gamma);
        p.overlap_avg = std::sqrt(2.0 / (p.gamma + 1.0));
        p.lr_dot = 1.0 / p.gamma;
    }
    p.nb_below_threshold = dbar <= k;
    p.nb_gamma_hat_ratio = k;
    if (!p.nb_below_threshold) p.nb_lr_dot = (1.0 - k / dbar) / std::sqrt(k);

    // a = 2n|ζ|₄⁴/d, b = 2n|ξ|₄⁴/d; critical point ab = 1
    const double a = 2.0 * in.kurt_left / (in.alpha * in.d);
    const double b = 2.0 * in.kurt_right / in.d;
    p.threshold_d_crit_rect = 2.0 * std::sqrt(in.kurt_left * in.kurt_right / in.alpha);
    p.rect_below_threshold = a * b >= 1.0;
    const double s2 = in.sigma * in.sigma;
    if (p.rect_below_threshold) {
        p.mse_sim = p.mse_avg = s2;
        return p;
    }
    p.gamma_tri = (1.0 + a) / (1.0 - a * b);
    p.gamma_nab = (1.0 + b) / (1.0 - a * b);
    p.gamma_rect = 0.5 * (p.gamma_tri + p.gamma_nab);
    p.c1_sim = 1.0 / std::sqrt(p.gamma_tri);
    p.c2_sim = 1.0 / std::sqrt(p.gamma_nab);
    p.c1_avg = std::sqrt(2.0 / (1.0 + p.gamma_tri));
    p.c2_avg = std::sqrt(2.0 / (1.0 + p.gamma_nab));
    p.mse_sim = s2 * (1.0 - std::pow(p.c1_sim * p.c2_sim, 2));
    p.mse_avg = s2 * (1.0 - std::pow(p.c1_avg * p.c2_avg, 2));
    return p;
}

inline RankOneInputs rank_one_inputs_from_sampler(const Sampler& s, double alpha, double d, double sigma = 1.0) {
    return {s.kurtosis(), s.kurtosis(), alpha, d, 0.0, sigma};
}

/// Measured fourth moments of the truth's leading vectors.
inline RankOneInputs rank_one_inputs_from_truth(const GroundTruth& gt, double d) {
    RankOneInputs in;
    in.kurt_left = double(gt.m) * gt.left.col(0).array().pow(4).sum();
    in.kurt_right = double(gt.n) * gt.right.col(0).array().pow(4).sum();
    in.alpha = double(gt.m) / double(gt.n);
    in.d = d;
    in.sigma = gt.sigma[0];
    return in;
}

}  // namespace spc
