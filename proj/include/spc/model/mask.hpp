#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spc/core/errors.hpp"
#include "spc/core/rng.hpp"
#include "spc/core/sparse_matrix.hpp"
#include "spc/model/ground_truth.hpp"

namespace spc {

struct MaskSample {
    Index m = 0;
    Index n = 0;
    double d = 0.0;
    std::uint64_t seed = 0;
    bool symmetric = false;
    std::vector<std::pair<Index, Index>> revealed;  // row-major sorted
};

struct ObservedEntries {
    SparseMatrix A;
    double scale = 1.0;
    std::string scale_tag;  // "raw", "n/d", "2n/d", or a custom label
    std::uint64_t mask_seed = 0;
};

namespace detail {

// Bernoulli(p) positions in [begin, end) by geometric skipping.
template <class Emit>
void bernoulli_run(Index begin, Index end, double p, Rng& rng, Emit&& emit) {
    if (p >= 1.0) {
        for (Index i = begin; i < end; ++i) emit(i);
        return;
    }
    std::geometric_distribution<long long> geo(p);
    long long pos = begin + geo(rng);
    while (pos < end) {
        emit(static_cast<Index>(pos));
        pos += 1 + geo(rng);
    }
}

}  // namespace detail

/// Each (x, y) ∈ [m]×[n] revealed independently with probability d/n,
/// loops included.
inline MaskSample sample_mask(Index m, Index n, double d, std::uint64_t seed) {
    require(m > 0 && n > 0, "sample_mask: empty dimensions");
    require(d > 0, "sample_mask: d must be positive");
    require(d <= n, "sample_mask: d must not exceed n");
    MaskSample mk{m, n, d, seed, false, {}};
    Rng rng = make_rng(seed, stream::mask);
    const double p = d / double(n);
    mk.revealed.reserve(static_cast<std::size_t>(1.1 * d * m + 16));
    for (Index x = 0; x < m; ++x) detail::bernoulli_run(0, n, p, rng, [&](Index y) { mk.revealed.push_back({x, y}); });
    return mk;
}

/// Symmetric mask: each unordered pair {x, y} (x ≤ y, loops included)
/// revealed with probability dbar/n; both orientations are listed.
inline MaskSample sample_symmetric_mask(Index n, double dbar, std::uint64_t seed) {
    require(n > 0, "sample_symmetric_mask: empty dimensions");
    require(dbar > 0 && dbar <= n, "sample_symmetric_mask: need 0 < dbar <= n");
    MaskSample mk{n, n, dbar, seed, true, {}};
    Rng rng = make_rng(seed, stream::mask, 1);
    const double p = dbar / double(n);
    std::vector<std::pair<Index, Index>> upper;
    for (Index x = 0; x < n; ++x) detail::bernoulli_run(x, n, p, rng, [&](Index y) { upper.push_back({x, y}); });
    mk.revealed.reserve(2 * upper.size());
    for (auto [x, y] : upper) {
        mk.revealed.push_back({x, y});
        if (x != y) mk.revealed.push_back({y, x});
    }
    std::sort(mk.revealed.begin(), mk.revealed.end());
    return mk;
}

inline MaskSample full_mask(Index m, Index n) {
    MaskSample mk{m, n, double(n), 0, false, {}};
    for (Index x = 0; x < m; ++x)
        for (Index y = 0; y < n; ++y) mk.revealed.push_back({x, y});
    return mk;
}

/// A with A_xy = scale · P_xy on revealed entries. P is evaluated from its
/// factors entry by entry, never densified.
inline ObservedEntries observe(const GroundTruth& gt, const MaskSample& mask, double scale,
                               std::string scale_tag = "custom") {
    require(mask.m == gt.m && mask.n == gt.n, "observe: mask dimensions do not match ground truth");
    const Mat ls = gt.left_scaled().transpose();  // r x m, column per row index
    const Mat rt = gt.right.transpose();           // r x n
    std::vector<Triplet> t;
    t.reserve(mask.revealed.size());
    for (auto [x, y] : mask.revealed) t.push_back({x, y, scale * ls.col(x).dot(rt.col(y))});
    return {SparseMatrix(gt.m, gt.n, std::move(t)), scale, std::move(scale_tag), mask.seed};
}

/// The unscaled observation T = P ⊙ M.
inline SparseMatrix observe_raw(const GroundTruth& gt, const MaskSample& mask) {
    return observe(gt, mask, 1.0, "raw").A;
}

/// The rescaled observation A = (n/d) P ⊙ M.
inline ObservedEntries observe_scaled(const GroundTruth& gt, const MaskSample& mask) {
    return observe(gt, mask, double(gt.n) / mask.d, "n/d");
}

}  // namespace spc
