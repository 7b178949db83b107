#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "spc/core/dense_eig.hpp"
#include "spc/io/bundle.hpp"
#include "spc/model/correlation.hpp"
#include "spc/model/ground_truth.hpp"
#include "spc/model/hermitize.hpp"
#include "spc/model/mask.hpp"
#include "spc/model/profile.hpp"
#include "spc/model/rank_one.hpp"

using namespace spc;

namespace {

GroundTruth sym_truth(Index n, std::vector<double> mu, const std::string& sampler, std::uint64_t seed) {
    return generate_ground_truth({n, n, std::move(mu), true, Sampler::parse(sampler)}, seed);
}

GroundTruth rect_truth(Index m, Index n, std::vector<double> s, const std::string& sampler, std::uint64_t seed) {
    return generate_ground_truth({m, n, std::move(s), false, Sampler::parse(sampler)}, seed);
}

double fourth(const Vec& v) { return double(v.size()) * v.array().pow(4).sum(); }

// Dense Q and the closed-form sum Σ_s ⟨1, (Q/c)^s v⟩ = ⟨1, (I − Q/c)⁻¹ v⟩.
Mat dense_q(const GroundTruth& gt) { return double(gt.n) * gt.dense().cwiseAbs2(); }

Mat dense_qtilde(const GroundTruth& gt) {
    const Index nt = gt.m + gt.n;
    Mat pt = Mat::Zero(nt, nt);
    pt.topRightCorner(gt.m, gt.n) = gt.dense();
    pt.bottomLeftCorner(gt.n, gt.m) = gt.dense().transpose();
    return double(nt) * pt.cwiseAbs2();
}

double resolvent_sum(const Mat& q, const Vec& v, double c) {
    const Index n = q.rows();
    Mat a = Mat::Identity(n, n) - q / c;
    return a.partialPivLu().solve(v).sum();
}

double truncated_sum(const Mat& q, Vec v, double c, int last) {
    double s = 0.0;
    for (int k = 0; k <= last; ++k) {
        if (k > 0) v = q * v / c;
        s += v.sum();
    }
    return s;
}

double top_sym_eig(const Mat& q) { return Eigen::SelfAdjointEigenSolver<Mat>(q).eigenvalues().maxCoeff(); }

}  // namespace

TEST(GroundTruth, ConstantSamplerGivesFlatVector) {
    auto gt = sym_truth(4, {1.0}, "constant", 1);
    for (Index i = 0; i < 4; ++i) EXPECT_NEAR(gt.phi(0)[i], 0.5, 1e-15);
    for (Index x = 0; x < 4; ++x)
        for (Index y = 0; y < 4; ++y) EXPECT_NEAR(gt.entry(x, y), 0.25, 1e-15);
}

TEST(GroundTruth, OrthonormalAndSorted) {
    auto gt = rect_truth(60, 90, {2.0, 7.0, 3.0}, "laplace", 5);
    EXPECT_LT((gt.left.transpose() * gt.left - Mat::Identity(3, 3)).norm(), 1e-10);
    EXPECT_LT((gt.right.transpose() * gt.right - Mat::Identity(3, 3)).norm(), 1e-10);
    EXPECT_EQ(gt.sigma, (std::vector<double>{7.0, 3.0, 2.0}));
    auto s = sym_truth(50, {1.0, -4.0}, "gaussian", 2);
    EXPECT_EQ(s.mu(), (std::vector<double>{-4.0, 1.0}));
    EXPECT_LT((s.dense() - s.dense().transpose()).norm(), 1e-12);
}

TEST(GroundTruth, DeterministicAndRankGuard) {
    auto a = rect_truth(20, 30, {1.0, 0.5}, "gaussian", 9);
    auto b = rect_truth(20, 30, {1.0, 0.5}, "gaussian", 9);
    auto c = rect_truth(20, 30, {1.0, 0.5}, "gaussian", 10);
    EXPECT_EQ(a.left, b.left);
    EXPECT_EQ(a.right, b.right);
    EXPECT_NE(a.left, c.left);
    EXPECT_THROW(rect_truth(3, 30, {1, 1, 1, 1}, "gaussian", 1), ContractViolation);
    EXPECT_THROW(rect_truth(1, 30, {1}, "gaussian", 1), ContractViolation);
}

TEST(GroundTruth, KurtosisTableValues) {
    EXPECT_NEAR(fourth(sym_truth(8000, {1.0}, "gaussian", 3).phi(0)), 3.0, 0.15);
    EXPECT_NEAR(fourth(sym_truth(8000, {1.0}, "hyperbolic_secant", 3).phi(0)), 5.0, 0.3);
}

TEST(GroundTruth, FourthMomentConvergencePerSampler) {
    for (const char* name : {"gaussian", "uniform", "laplace", "hyperbolic_secant", "bernoulli(0.25)", "constant"}) {
        const Sampler s = Sampler::parse(name);
        double mean = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) mean += fourth(sym_truth(4000, {1.0}, name, seed).phi(0));
        mean /= 20.0;
        EXPECT_NEAR(mean, s.kurtosis(), 0.05 * s.kurtosis()) << name;
    }
}

TEST(Mask, FullAndEmpty) {
    auto full = sample_mask(7, 9, 9.0, 1);
    EXPECT_EQ(full.revealed.size(), 63u);
    auto tiny = sample_mask(100, 100, 1e-9, 1);
    EXPECT_TRUE(tiny.revealed.empty());
    EXPECT_THROW(sample_mask(10, 10, 11.0, 1), ContractViolation);
    EXPECT_THROW(sample_mask(10, 10, 0.0, 1), ContractViolation);
}

TEST(Mask, CountWithinFourSigma) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto mk = sample_mask(2000, 2000, 9.7, seed);
        EXPECT_LT(std::abs(double(mk.revealed.size()) - 9.7 * 2000), 4.0 * std::sqrt(9.7 * 2000));
        EXPECT_TRUE(std::is_sorted(mk.revealed.begin(), mk.revealed.end()));
    }
    auto a = sample_mask(300, 400, 5.0, 77), b = sample_mask(300, 400, 5.0, 77);
    EXPECT_EQ(a.revealed, b.revealed);
}

TEST(Mask, SymmetricMaskIsSymmetric) {
    auto mk = sample_symmetric_mask(500, 6.0, 4);
    std::set<std::pair<Index, Index>> s(mk.revealed.begin(), mk.revealed.end());
    for (auto [x, y] : mk.revealed) EXPECT_TRUE(s.count({y, x}));
    // expected directed count ≈ dbar·n
    EXPECT_LT(std::abs(double(mk.revealed.size()) - 6.0 * 500), 4.0 * std::sqrt(2.0 * 6.0 * 500));
}

TEST(Observe, FullMaskReproducesP) {
    auto gt = rect_truth(40, 60, {3.0, 1.0}, "gaussian", 2);
    auto obs = observe(gt, full_mask(40, 60), 1.0);
    EXPECT_LT((obs.A.to_dense() - gt.dense()).cwiseAbs().maxCoeff(), 1e-12);
    auto empty = observe(gt, MaskSample{40, 60, 1.0, 0, false, {}}, 1.0);
    EXPECT_EQ(empty.A.nnz(), 0);
    EXPECT_THROW(observe(gt, full_mask(40, 61), 1.0), ContractViolation);
}

TEST(Observe, ScaledValuesMatchP) {
    auto er = erdos_renyi_truth(300);
    auto obs = observe_scaled(er, sample_mask(300, 300, 4.0, 8));
    EXPECT_EQ(obs.scale_tag, "n/d");
    for (double v : obs.A.values()) EXPECT_NEAR(v, 0.25, 1e-12);
    auto gt = rect_truth(80, 120, {2.0, 1.0}, "uniform", 3);
    auto o2 = observe(gt, sample_mask(80, 120, 10.0, 4), 12.0);
    for (const auto& t : o2.A.triplets()) EXPECT_NEAR(t.value, 12.0 * gt.entry(t.row, t.col), 1e-12);
}

TEST(Hermitize, RankOneSpectrum) {
    auto gt = rect_truth(8, 12, {1.0}, "gaussian", 1);
    auto h = hermitize(gt);
    auto eig = dense_reference_eig(h.op.to_dense());
    EXPECT_NEAR(eig[0].value.real(), 1.0, 1e-10);
    EXPECT_NEAR(eig[1].value.real(), -1.0, 1e-10);
    for (std::size_t i = 2; i < eig.size(); ++i) EXPECT_LT(std::abs(eig[i].value), 1e-10);
}

TEST(Hermitize, TwoSpikeSpectrumAndVectors) {
    auto gt = rect_truth(20, 30, {5.0, 3.0}, "gaussian", 4);
    auto h = hermitize(gt);
    auto eig = dense_reference_eig(h.op.to_dense());
    std::vector<double> top;
    for (int i = 0; i < 4; ++i) top.push_back(eig[i].value.real());
    std::sort(top.begin(), top.end());
    EXPECT_NEAR(top[0], -5.0, 1e-10);
    EXPECT_NEAR(top[1], -3.0, 1e-10);
    EXPECT_NEAR(top[2], 3.0, 1e-10);
    EXPECT_NEAR(top[3], 5.0, 1e-10);
    for (Index k = 0; k < 2; ++k) {
        const Vec p = h.phi_plus.col(k), mn = h.phi_minus.col(k);
        EXPECT_NEAR(p.norm(), 1.0, 1e-12);
        EXPECT_NEAR(mn.norm(), 1.0, 1e-12);
        for (Index j = 0; j < 2; ++j) EXPECT_NEAR(p.dot(h.phi_minus.col(j)), 0.0, 1e-10);
        EXPECT_LT((h.op.apply(p) - gt.sigma[k] * p).norm(), 1e-10);
        EXPECT_LT((h.op.apply(mn) + gt.sigma[k] * mn).norm(), 1e-10);
    }
}

TEST(Profile, ErdosRenyi) {
    auto p = detection_profile(erdos_renyi_truth(1000), 4.0, Variant::square);
    EXPECT_NEAR(p.rho, 1.0, 1e-8);
    EXPECT_NEAR(p.theta2, 0.5, 1e-8);
    EXPECT_NEAR(p.theta1, 0.25, 1e-12);
    EXPECT_NEAR(p.theta, 0.5, 1e-8);
    EXPECT_EQ(p.r0, 1);
    EXPECT_NEAR(p.tau0, 0.5, 1e-8);
    EXPECT_TRUE(p.rho_converged);
    // ℓ = ⌊log_8(1000)/8⌋ = 0
    EXPECT_EQ(p.ell, 0);
}

TEST(Profile, StrictThreshold) {
    // d = 1: ϑ₁ = ϑ₂ = 1 = μ₁, counted below threshold
    auto p = detection_profile(erdos_renyi_truth(100), 1.0, Variant::square);
    EXPECT_NEAR(p.theta, 1.0, 1e-8);
    EXPECT_EQ(p.r0, 0);
    EXPECT_TRUE(std::isnan(p.tau0));
    EXPECT_THROW(detection_profile(erdos_renyi_truth(100), 0.0, Variant::square), ContractViolation);
}

TEST(Profile, TwoBlockExample) {
    auto gt = two_block_truth(2000, 5.0, 3.0);
    auto p = detection_profile(gt, 3.0, Variant::square);
    EXPECT_NEAR(p.rho, 34.0, 1e-6);
    EXPECT_NEAR(p.theta2, std::sqrt(34.0 / 3.0), 1e-7);
    EXPECT_EQ(p.r0, 1);
    auto nb = detection_profile(gt, 6.0, Variant::nb);
    EXPECT_NEAR(nb.theta2, std::sqrt(34.0 / 6.0), 1e-7);
    EXPECT_EQ(nb.r0, 2);
    EXPECT_NEAR(nb.D, 6.0, 0);
    EXPECT_NEAR(p.D, 6.0, 0);
}

TEST(Profile, RhoMatchesDenseOracleAndBounds) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto gt = sym_truth(150, {3.0, -2.0, 1.0}, seed % 2 ? "gaussian" : "laplace", seed);
        auto p = detection_profile(gt, 7.0, Variant::square);
        const Mat q = dense_q(gt);
        EXPECT_NEAR(p.rho, top_sym_eig(q), 1e-6 * p.rho);
        const double mu1 = std::abs(gt.mu()[0]);
        EXPECT_GE(p.rho, q.sum() / 150.0 * (1 - 1e-9));
        EXPECT_GE(p.rho, mu1 * mu1);
        EXPECT_GE(p.theta2, mu1 / std::sqrt(7.0));
        EXPECT_NEAR(p.L, 150.0 * gt.dense().cwiseAbs().maxCoeff(), 1e-12 * p.L);
        EXPECT_LE(p.L, mu1 * p.b_row * p.b_row * (1 + 1e-12));
        int above = 0;
        for (double v : p.values) above += std::abs(v) > p.theta;
        EXPECT_EQ(p.r0, above);
    }
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto gt = sym_truth(300, {2.0}, "hyperbolic_secant", seed);
        auto p = detection_profile(gt, 5.0, Variant::square);
        EXPECT_LE(p.L, 2.0 * p.b * p.b * (1 + 1e-12));
        EXPECT_NEAR(p.b, p.b_row, 1e-12);
    }
}

TEST(Profile, ExplicitQPathMatchesLowRank) {
    std::vector<double> mu;
    for (int k = 0; k < 9; ++k) mu.push_back(9.0 - k);
    auto gt = sym_truth(120, mu, "gaussian", 3);
    auto p = detection_profile(gt, 20.0, Variant::square);
    EXPECT_NEAR(p.rho, top_sym_eig(dense_q(gt)), 1e-6 * p.rho);
}

TEST(Profile, Rectangular) {
    auto gt = rect_truth(100, 300, {5.0, 3.0}, "gaussian", 6);
    auto p = detection_profile(gt, 20.0, Variant::rectangular);
    EXPECT_EQ(p.n_used, 400);
    EXPECT_NEAR(p.d_used, (1.0 + 1.0 / 3.0) * 20.0 / 2.0, 1e-12);
    EXPECT_NEAR(p.rho, top_sym_eig(dense_qtilde(gt)), 1e-6 * p.rho);
    EXPECT_NEAR(p.rho, (1.0 + 1.0 / 3.0) * p.rho_base, 1e-9 * p.rho);
    EXPECT_NEAR(p.L, 400.0 * gt.dense().cwiseAbs().maxCoeff(), 1e-9 * p.L);
    EXPECT_NEAR(p.theta2, std::sqrt(p.rho / p.d_used), 1e-12);
    EXPECT_EQ(p.gap_ratios.size(), std::size_t(p.r0));
}

TEST(Profile, ExampleTwoSpikeRho) {
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto gt = rect_truth(1000, 5000, {5.0, 3.0}, "gaussian", seed);
        mean += detection_profile(gt, 50.0, Variant::rectangular).rho_base / 5.0;
    }
    EXPECT_NEAR(mean, 170.0, 10.0);
}

TEST(Correlation, ErdosRenyi) {
    auto gt = erdos_renyi_truth(500);
    auto p = detection_profile(gt, 4.0, Variant::square);
    auto t = correlation_tables(gt, p);
    ASSERT_EQ(t.gamma.size(), 1u);
    EXPECT_NEAR(t.gamma[0], 4.0 / 3.0, 1e-12);
    EXPECT_TRUE(t.converged);
    auto tp = correlation_tables(gt, p, {Truncation::fixed});
    EXPECT_NEAR(tp.gamma[0], (1 - std::pow(0.25, p.ell + 1)) / 0.75, 1e-12);
    // fixed truncation with a forced ℓ
    DetectionProfile p2 = p;
    p2.ell = 3;
    EXPECT_NEAR(correlation_tables(gt, p2, {Truncation::fixed}).gamma[0], (1 - std::pow(0.25, 4)) / 0.75, 1e-12);
}

TEST(Correlation, MatchesDenseResolvent) {
    auto gt = sym_truth(120, {4.0, -3.0}, "laplace", 11);
    auto p = detection_profile(gt, 25.0, Variant::square);
    ASSERT_EQ(p.r0, 2);
    auto t = correlation_tables(gt, p);
    const Mat q = dense_q(gt);
    const auto mu = gt.mu();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const Vec v = gt.phi(i).cwiseProduct(gt.phi(j));
            EXPECT_NEAR(t.Gamma(i, j), resolvent_sum(q, v, mu[i] * mu[j] * 25.0), 1e-9) << i << j;
        }
    DetectionProfile p3 = p;
    p3.ell = 3;
    auto tp = correlation_tables(gt, p3, {Truncation::fixed});
    EXPECT_NEAR(tp.Gamma(0, 1), truncated_sum(q, gt.phi(0).cwiseProduct(gt.phi(1)), mu[0] * mu[1] * 25.0, 3), 1e-12);
    for (double g : t.gamma) EXPECT_GE(g, 1.0);
}

TEST(Correlation, GammaHatNb) {
    auto gt = two_block_truth(400, 5.0, 3.0);
    auto p = detection_profile(gt, 6.0, Variant::nb);
    auto t = correlation_tables(gt, p);
    ASSERT_EQ(t.gamma_hat.size(), 2u);
    // constant row sums of Q: γ̂ = ρ γ / μ²
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(t.gamma_hat[i], 34.0 * t.gamma[i] / std::pow(p.values[i], 2), 1e-9);
    EXPECT_NEAR(t.gamma[1], 1.0 / (1.0 - 34.0 / (9.0 * 6.0)), 1e-9);
}

TEST(Correlation, LargeDLimitAndMonotone) {
    auto gt = sym_truth(200, {3.0, 2.0}, "gaussian", 4);
    auto big = correlation_tables(gt, detection_profile(gt, 1e6, Variant::square));
    for (double g : big.gamma) EXPECT_LT(std::abs(g - 1.0), 1e-3);
    auto huge = correlation_tables(gt, detection_profile(gt, 1e9, Variant::square));
    for (double g : huge.gamma) EXPECT_LT(std::abs(g - 1.0), 1e-7);
    double prev = 1e300;
    for (double d : {5.0, 10.0, 50.0, 500.0}) {
        auto p = detection_profile(gt, d, Variant::square);
        auto t = correlation_tables(gt, p, {Truncation::converged, 10000, 1e-13, 1});
        EXPECT_LE(t.gamma[0], prev);
        prev = t.gamma[0];
    }
}

TEST(Correlation, RectangularIdentitiesAndOracle) {
    auto gt = rect_truth(60, 90, {5.0, 3.0}, "gaussian", 12);
    auto p = detection_profile(gt, 40.0, Variant::rectangular);
    ASSERT_EQ(p.r0, 2);
    auto t = correlation_tables(gt, p);
    const Mat q = dense_qtilde(gt);
    const Index nt = 150;
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(t.gamma_tri[i] + t.gamma_nab[i], 2.0 * t.gamma[i], 1e-10);
        Vec up = Vec::Zero(nt);
        up.head(60) = gt.left.col(i).cwiseAbs2();
        EXPECT_NEAR(t.gamma_tri[i], resolvent_sum(q, up, gt.sigma[i] * gt.sigma[i] * p.d_used), 1e-9);
        Vec pp(nt);
        pp << gt.left.col(i), gt.right.col(i);
        pp /= std::sqrt(2.0);
        EXPECT_NEAR(t.gamma[i], resolvent_sum(q, pp.cwiseAbs2(), gt.sigma[i] * gt.sigma[i] * p.d_used), 1e-9);
    }
    EXPECT_NEAR(t.Gamma(0, 1), t.Gamma(1, 0), 1e-10);
    // off-diagonal △ entries use σᵢ² as printed
    Vec up01 = Vec::Zero(nt);
    up01.head(60) = gt.left.col(0).cwiseProduct(gt.left.col(1));
    EXPECT_NEAR(t.Gamma_tri(0, 1), resolvent_sum(q, up01, 25.0 * p.d_used), 1e-9);
    EXPECT_NEAR(t.Gamma_tri(1, 0), resolvent_sum(q, up01, 9.0 * p.d_used), 1e-9);
    // s = 0 term is ⟨φ⁺ᵢ, φ⁻ⱼ⟩ = 0, so Γ^{+−} → 0 as d → ∞
    auto far = correlation_tables(gt, detection_profile(gt, 1e8, Variant::rectangular));
    EXPECT_NEAR(far.Gamma_pm(0, 0), 0.0, 1e-6);
    EXPECT_NEAR(far.Gamma_pm(0, 1), 0.0, 1e-6);
}

TEST(Correlation, RectangularRankOneClosedForm) {
    auto gt = rect_truth(300, 500, {1.0}, "laplace", 3);
    const double d = 60.0;
    auto p = detection_profile(gt, d, Variant::rectangular);
    auto t = correlation_tables(gt, p, {Truncation::converged, 10000, 1e-13, 1});
    const double a = 2.0 * 500 * gt.left.col(0).array().pow(4).sum() / d;
    const double b = 2.0 * 500 * gt.right.col(0).array().pow(4).sum() / d;
    EXPECT_NEAR(t.gamma_tri[0], (1 + a) / (1 - a * b), 1e-10);
    EXPECT_NEAR(t.gamma_nab[0], (1 + b) / (1 - a * b), 1e-10);
    auto pr = rank_one_predictions(rank_one_inputs_from_truth(gt, d));
    EXPECT_NEAR(pr.gamma_tri, t.gamma_tri[0], 1e-10);
    EXPECT_NEAR(pr.gamma_nab, t.gamma_nab[0], 1e-10);
}

TEST(Correlation, GaussianRectangularAlphaOne) {
    // (1 + 2k/d) / (1 − 4k²/(d²α)) at k = 3, d = 50, α = 1
    const double formula = (1 + 6.0 / 50) / (1 - 36.0 / 2500);
    EXPECT_NEAR(formula, 1.13636, 1e-5);
    auto pr = rank_one_predictions(rank_one_inputs_from_sampler(Sampler::parse("gaussian"), 1.0, 50.0));
    EXPECT_NEAR(pr.gamma_tri, formula, 1e-12);
    auto gt = rect_truth(4000, 4000, {1.0}, "gaussian", 7);
    auto t = correlation_tables(gt, detection_profile(gt, 50.0, Variant::rectangular));
    EXPECT_NEAR(t.gamma_tri[0], formula, 0.01);
}

TEST(Correlation, ContractChecks) {
    auto gt = erdos_renyi_truth(50);
    auto p = detection_profile(gt, 4.0, Variant::square);
    EXPECT_THROW(correlation_tables(gt, p, {Truncation::converged, 10000, 1e-13, 2}), ContractViolation);
    auto rect = rect_truth(10, 20, {1.0}, "gaussian", 1);
    EXPECT_THROW(detection_profile(rect, 4.0, Variant::square), ContractViolation);
}

TEST(Correlation, BelowThresholdFlagsDivergence) {
    auto gt = erdos_renyi_truth(50);
    auto p = detection_profile(gt, 0.5, Variant::square);
    auto t = correlation_tables(gt, p, {Truncation::converged, 10000, 1e-13, 1});
    EXPECT_FALSE(t.converged);
}

TEST(RankOne, SymmetricGaussian) {
    auto pr = rank_one_predictions(rank_one_inputs_from_sampler(Sampler::parse("gaussian"), 1.0, 10.0));
    EXPECT_NEAR(pr.gamma, 10.0 / 7.0, 1e-12);
    EXPECT_NEAR(pr.overlap_sim, std::sqrt(0.7), 1e-12);
    EXPECT_NEAR(pr.overlap_avg, 0.9075, 1e-4);
    EXPECT_NEAR(pr.lr_dot, 0.7, 1e-12);
    EXPECT_NEAR(pr.nb_lr_dot, 0.7 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(pr.threshold_d_crit, 3.0, 0);
    EXPECT_FALSE(pr.below_threshold);
}

TEST(RankOne, TableThresholds) {
    EXPECT_NEAR(Sampler::parse("laplace").kurtosis(), 6.0, 0);
    EXPECT_NEAR(rank_one_predictions(rank_one_inputs_from_sampler(Sampler::parse("laplace"), 1, 10)).threshold_d_crit,
                6.0, 0);
    auto rad = rank_one_predictions(rank_one_inputs_from_sampler(Sampler::parse("rademacher"), 1, 7.0));
    EXPECT_NEAR(rad.gamma, 1.0 / (1.0 - 1.0 / 7.0), 1e-12);
    auto below = rank_one_predictions(rank_one_inputs_from_sampler(Sampler::parse("gaussian"), 1, 2.0));
    EXPECT_TRUE(below.below_threshold);
    EXPECT_EQ(below.overlap_sim, 0.0);
    EXPECT_TRUE(below.rect_below_threshold);
    EXPECT_EQ(below.mse_avg, 1.0);
}

TEST(RankOne, RectangularMse) {
    // square n×n, k = 3, d = 10: a = b = 0.6, γ^△ = 1.6/0.64 = 2.5
    auto pr = rank_one_predictions(rank_one_inputs_from_sampler(Sampler::parse("gaussian"), 1.0, 10.0, 2.0));
    EXPECT_NEAR(pr.gamma_tri, 2.5, 1e-12);
    EXPECT_NEAR(pr.threshold_d_crit_rect, 6.0, 1e-12);
    EXPECT_NEAR(pr.mse_sim, 4.0 * (1 - 1 / 6.25), 1e-12);
    EXPECT_NEAR(pr.mse_avg, 4.0 * (1 - 4 / 12.25), 1e-12);
    EXPECT_LT(pr.mse_avg, pr.mse_sim);
    EXPECT_GE(pr.c1_avg, pr.c1_sim);
}

TEST(Bundle, RoundTrip) {
    auto gt = sym_truth(30, {2.0, -1.0}, "bernoulli(0.3)", 5);
    auto dir = std::filesystem::temp_directory_path() / "spc_bundle_test";
    std::filesystem::create_directories(dir);
    write_bundle(dir / "gt", gt);
    auto back = read_bundle(dir / "gt.json");
    EXPECT_EQ(back.left, gt.left);
    EXPECT_EQ(back.right, gt.right);
    EXPECT_EQ(back.sigma, gt.sigma);
    EXPECT_EQ(back.eigen_signs, gt.eigen_signs);
    EXPECT_EQ(back.sampler.kind, SamplerKind::bernoulli);
    EXPECT_NEAR(back.sampler.param, 0.3, 1e-6);
    EXPECT_THROW(read_bundle(dir / "missing"), ParseError);
    std::filesystem::remove_all(dir);
}
