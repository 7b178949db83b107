#pragma once

#include <cmath>
#include <future>
#include <random>
#include <vector>

#include "spc/core/errors.hpp"
#include "spc/core/rng.hpp"
#include "spc/model/ground_truth.hpp"
#include "spc/model/profile.hpp"

namespace spc {

/// Marked Galton–Watson tree stored generation by generation. Node 0 is the
/// root; parents always precede children. out[v] is true when the edge
/// points parent → v.
struct MarkedTree {
    std::vector<Index> parent;
    std::vector<char> out;
    std::vector<Index> mark;
    std::vector<int> generation;
    std::vector<Index> gen_start;  // gen_start[g]..gen_start[g+1]
    int depth = 0;

    Index size() const { return Index(parent.size()); }
};

/// Each node gets Poi(d) out-children and Poi(d) in-children (Poi(2d) with
/// fair orientations), marks uniform on [n]. out_only drops the in-children,
/// which no directed root path can reach.
inline MarkedTree sample_gw_tree(double d, Index n, int depth, Index root_mark, Rng& rng, bool out_only = false) {
    require(depth >= 0, "sample_gw_tree: depth >= 0");
    require(d > 0 && n >= 1 && root_mark >= 0 && root_mark < n, "sample_gw_tree: bad parameters");
    const double branching = out_only ? d : 2.0 * d;
    require(std::pow(branching, depth) <= 1e7, "sample_gw_tree: expected size exceeds 1e7 nodes");
    std::poisson_distribution<int> poi(d);
    std::uniform_int_distribution<Index> unif(0, n - 1);
    MarkedTree t;
    t.depth = depth;
    t.parent.push_back(-1);
    t.out.push_back(1);
    t.mark.push_back(root_mark);
    t.generation.push_back(0);
    t.gen_start = {0, 1};
    for (int g = 0; g < depth; ++g) {
        const Index lo = t.gen_start[g], hi = t.gen_start[g + 1];
        for (Index v = lo; v < hi; ++v) {
            const int k_out = poi(rng);
            const int k_in = out_only ? 0 : poi(rng);
            for (int c = 0; c < k_out + k_in; ++c) {
                t.parent.push_back(v);
                t.out.push_back(c < k_out ? 1 : 0);
                t.mark.push_back(unif(rng));
                t.generation.push_back(g + 1);
            }
        }
        t.gen_start.push_back(t.size());
    }
    return t;
}

inline MarkedTree sample_gw_tree(double d, Index n, int depth, Index root_mark, std::uint64_t seed) {
    Rng rng = make_rng(seed, stream::tree, 0);
    return sample_gw_tree(d, n, depth, root_mark, rng);
}

/// f_{φ,ψ,t}(T, o) = (n/d)^t φ(ι(o)) Σ over directed root paths of length t
/// of Π P along the path times ψ(ι(x_t)). Returns the value for every
/// s ≤ t in one pass (index s), with φ ≡ 1 so the caller multiplies φ(ι(o)).
template <class Entry>
std::vector<double> tree_path_sums(const MarkedTree& tr, Entry&& p_entry, double scale, const Vec& psi, int t) {
    require(t <= tr.depth, "eval_tree_functional: tree shallower than t");
    std::vector<double> w(tr.size(), 0.0), out(t + 1, 0.0);
    w[0] = 1.0;
    out[0] = psi[tr.mark[0]];
    for (Index v = 1; v < tr.gen_start[t + 1]; ++v) {
        const Index u = tr.parent[v];
        if (!tr.out[v] || w[u] == 0.0) continue;
        w[v] = w[u] * scale * p_entry(tr.mark[u], tr.mark[v]);
        out[tr.generation[v]] += w[v] * psi[tr.mark[v]];
    }
    return out;
}

inline double eval_tree_functional(const MarkedTree& tr, const GroundTruth& gt, double d, const Vec& phi,
                                   const Vec& psi, int t) {
    const double s = double(gt.n) / d;
    auto sums = tree_path_sums(tr, [&](Index a, Index b) { return gt.entry(a, b); }, s, psi, t);
    return phi[tr.mark[0]] * sums[t];
}

struct TreeMoments {
    int t = 0;
    Index x = 0;
    int i = 0, j = 0;
    long samples = 0;
    // Monte-Carlo means and standard errors
    double mean_f = 0, se_f = 0;    // f_{φᵢ,φⱼ,t}
    double mean_ff = 0, se_ff = 0;  // f_{φᵢ,φᵢ,t} f_{φᵢ,φⱼ,t}
    double mean_F2 = 0, se_F2 = 0;  // F_{μᵢ,φᵢ,t}²
    // closed forms
    double tc1 = 0;
    double tc3 = 0;
    double tc5_printed = 0;  // Qᵗφ^{i,i}(x)/dᵗ
    double tc5_derived = 0;  // Q^{t+1}φ^{i,i}(x)/(μᵢ² d^{t+1})

    double z_tc1() const { return se_f > 0 ? (mean_f - tc1) / se_f : (mean_f == tc1 ? 0.0 : INFINITY); }
    double z_tc3() const { return se_ff > 0 ? (mean_ff - tc3) / se_ff : (mean_ff == tc3 ? 0.0 : INFINITY); }
    double z_tc5(bool printed) const {
        const double c = printed ? tc5_printed : tc5_derived;
        return se_F2 > 0 ? (mean_F2 - c) / se_F2 : (std::abs(mean_F2 - c) <= 1e-12 * std::abs(c) ? 0.0 : INFINITY);
    }
};

/// Q^s v for s = 0..smax with Q = n P⊙P.
inline std::vector<Vec> q_powers(const GroundTruth& gt, const Vec& v, int smax) {
    VarianceOperator q(gt, false);
    std::vector<Vec> out{v};
    for (int s = 1; s <= smax; ++s) out.push_back(q.apply(out.back()));
    return out;
}

inline TreeMoments mc_tree_moments(const GroundTruth& gt, double d, Index x, int i, int j, int t, long num_samples,
                                   std::uint64_t seed, int threads = 1) {
    require(gt.symmetric && gt.m == gt.n, "mc_tree_moments: symmetric square truth required");
    require(t >= 0 && num_samples >= 2, "mc_tree_moments: t >= 0 and at least two samples");
    require(i >= 0 && j >= 0 && i < gt.rank() && j < gt.rank(), "mc_tree_moments: eigen index out of range");
    require(x >= 0 && x < gt.n, "mc_tree_moments: root mark out of range");
    const Index n = gt.n;
    const auto mu = gt.mu();
    const Vec phi_i = gt.phi(i), phi_j = gt.phi(j);
    const double scale = double(n) / d;
    const Mat ls = gt.left_scaled().transpose(), rt = gt.right.transpose();
    auto p_entry = [&](Index a, Index b) { return ls.col(a).dot(rt.col(b)); };

    std::vector<double> f(num_samples), ff(num_samples), F2(num_samples);
    auto run = [&](long lo, long hi) {
        for (long s = lo; s < hi; ++s) {
            Rng rng = make_rng(seed, stream::tree, std::uint64_t(s));
            const auto tr = sample_gw_tree(d, n, t + 1, x, rng, true);
            const auto sj = tree_path_sums(tr, p_entry, scale, phi_j, t);
            const auto si = tree_path_sums(tr, p_entry, scale, phi_i, t + 1);
            const double fj = phi_i[x] * sj[t];
            const double fi = phi_i[x] * si[t];
            const double big_f = si[t] - si[t + 1] / mu[i];
            f[s] = fj;
            ff[s] = fi * fj;
            F2[s] = big_f * big_f;
        }
    };
    threads = std::max(1, threads);
    if (threads == 1) {
        run(0, num_samples);
    } else {
        std::vector<std::future<void>> jobs;
        const long chunk = (num_samples + threads - 1) / threads;
        for (long lo = 0; lo < num_samples; lo += chunk) jobs.push_back(std::async(std::launch::async, run, lo, std::min(num_samples, lo + chunk)));
        for (auto& jb : jobs) jb.get();
    }
    auto mean_se = [&](const std::vector<double>& v, double& m, double& se) {
        double a = 0;
        for (double z : v) a += z;
        m = a / double(v.size());
        double q = 0;
        for (double z : v) q += (z - m) * (z - m);
        se = std::sqrt(q / double(v.size() - 1) / double(v.size()));
    };

    TreeMoments r;
    r.t = t;
    r.x = x;
    r.i = i;
    r.j = j;
    r.samples = num_samples;
    mean_se(f, r.mean_f, r.se_f);
    mean_se(ff, r.mean_ff, r.se_ff);
    mean_se(F2, r.mean_F2, r.se_F2);

    r.tc1 = phi_i[x] * phi_j[x] * std::pow(mu[j], t);
    const auto qij = q_powers(gt, phi_i.cwiseProduct(phi_j), t);
    double sum = 0;
    for (int s = 0; s <= t; ++s) sum += qij[s][x] / std::pow(mu[i] * mu[j] * d, s);
    r.tc3 = std::pow(mu[i], t) * std::pow(mu[j], t) * phi_i[x] * phi_i[x] * sum;
    const auto qii = q_powers(gt, phi_i.cwiseAbs2(), t + 1);
    r.tc5_printed = qii[t][x] / std::pow(d, t);
    r.tc5_derived = qii[t + 1][x] / (mu[i] * mu[i] * std::pow(d, t + 1));
    return r;
}

}  // namespace spc
