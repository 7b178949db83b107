#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spc/io/bundle.hpp"
#include "spc/core/eigen_pair.hpp"
#include "spc/model/correlation.hpp"
#include "spc/model/profile.hpp"
#include "spc/model/rank_one.hpp"
#include "spc/nb/nonbacktracking.hpp"

namespace spc {

using json = nlohmann::json;

// NaN and ±inf are not JSON; they go out as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json num_list(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline json mat_json(const Mat& m) {
    json a = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
        a.push_back(row);
    }
    return a;
}

inline json cplx_json(cplx z) { return json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

inline json to_json(const DetectionProfile& p) {
    return {{"variant", variant_name(p.variant)},
            {"d", num(p.d)},
            {"d_used", num(p.d_used)},
            {"n_used", p.n_used},
            {"D", num(p.D)},
            {"L", num(p.L)},
            {"rho", num(p.rho)},
            {"rho_base", num(p.rho_base)},
            {"rho_converged", p.rho_converged},
            {"theta1", num(p.theta1)},
            {"theta2", num(p.theta2)},
            {"theta", num(p.theta)},
            {"r0", p.r0},
            {"tau0", num(p.tau0)},
            {"ell", p.ell},
            {"values", num_list(p.values)},
            {"gap_ratios", num_list(p.gap_ratios)},
            {"b", num(p.b)},
            {"b_row", num(p.b_row)}};
}

inline json to_json(const CorrelationTables& t) {
    json j{{"variant", variant_name(t.variant)},
           {"truncation", truncation_name(t.policy)},
           {"d_used", num(t.d_used)},
           {"ell", t.ell},
           {"count", t.count},
           {"converged", t.converged},
           {"max_terms_used", t.max_terms_used},
           {"gamma", num_list(t.gamma)},
           {"Gamma", mat_json(t.Gamma)}};
    if (t.variant == Variant::rectangular) {
        j["gamma_tri"] = num_list(t.gamma_tri);
        j["gamma_nab"] = num_list(t.gamma_nab);
        j["Gamma_tri"] = mat_json(t.Gamma_tri);
        j["Gamma_nab"] = mat_json(t.Gamma_nab);
        j["Gamma_pm"] = mat_json(t.Gamma_pm);
    }
    if (t.variant == Variant::nb) j["gamma_hat"] = num_list(t.gamma_hat);
    return j;
}

inline json to_json(const RankOnePredictions& p) {
    return {{"threshold_d_crit", num(p.threshold_d_crit)},
            {"theta2", num(p.theta2)},
            {"below_threshold", p.below_threshold},
            {"gamma", num(p.gamma)},
            {"overlap_sim", num(p.overlap_sim)},
            {"overlap_avg", num(p.overlap_avg)},
            {"lr_dot", num(p.lr_dot)},
            {"nb_below_threshold", p.nb_below_threshold},
            {"nb_lr_dot", num(p.nb_lr_dot)},
            {"nb_gamma_hat_ratio", num(p.nb_gamma_hat_ratio)},
            {"threshold_d_crit_rect", num(p.threshold_d_crit_rect)},
            {"rect_below_threshold", p.rect_below_threshold},
            {"gamma_rect", num(p.gamma_rect)},
            {"gamma_tri", num(p.gamma_tri)},
            {"gamma_nab", num(p.gamma_nab)},
            {"c1_sim", num(p.c1_sim)},
            {"c2_sim", num(p.c2_sim)},
            {"c1_avg", num(p.c1_avg)},
            {"c2_avg", num(p.c2_avg)},
            {"mse_sim", num(p.mse_sim)},
            {"mse_avg", num(p.mse_avg)}};
}

struct PredictOptions {
    Truncation policy = Truncation::converged;
    int count = -1;  // -1 → r₀
};

/// Every theory quantity for (P, d, variant). count = -1 tabulates r₀
/// indices; when r₀ = 0 the caller may force a count.
inline json predict(const GroundTruth& gt, double d, Variant variant, const PredictOptions& opt = {}) {
    const auto prof = detection_profile(gt, d, variant);
    SeriesOptions so;
    so.policy = opt.policy;
    so.count = opt.count < 0 ? prof.r0 : std::min<int>(opt.count, int(gt.rank()));
    const auto tab = correlation_tables(gt, prof, so);
    json j{{"truth", truth_header(gt)}, {"profile", to_json(prof)}, {"tables", to_json(tab)}};
    if (variant == Variant::nb) {
        const auto nb = nb_predictions(gt, d, so);
        j["nb"] = {{"threshold", num(nb.threshold)},
                   {"r0", nb.r0},
                   {"lr_dot", num_list(nb.lr_dot)},
                   {"c_min_eig", num(nb.c_min_eig)}};
    }
    if (gt.rank() == 1) {
        j["rank_one_available"] = true;
        j["rank_one"] = to_json(rank_one_predictions(rank_one_inputs_from_truth(gt, d)));
    } else {
        j["rank_one_available"] = false;
    }
    return j;
}

inline json to_json(const EigenPair& p) {
    return {{"value", cplx_json(p.value)},
            {"modulus", num(std::abs(p.value))},
            {"lr_overlap", num(p.lr_overlap)},
            {"residual", num(p.residual)},
            {"converged", p.converged},
            {"cluster", p.cluster},
            {"defective", p.defective}};
}

}  // namespace spc
