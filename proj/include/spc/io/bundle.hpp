#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#if __has_include(<json.hpp>)
#include <json.hpp>
#else
#include <nlohmann/json.hpp>
#endif

#include "spc/core/errors.hpp"
#include "spc/model/ground_truth.hpp"

namespace spc {

/// Ground-truth bundle: `<stem>.json` header plus `<stem>.bin` with
/// little-endian float64, left factor column-major then right factor.
struct Bundle {
    static constexpr const char* kFormat = "spc-ground-truth-v1";
};

namespace detail {

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    os.write(reinterpret_cast<const char*>(&u), 8);
}

inline double read_f64(std::istream& is) {
    std::uint64_t u;
    is.read(reinterpret_cast<char*>(&u), 8);
    if (!is) throw ParseError("bundle: truncated binary sidecar", 0);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace detail

inline nlohmann::json truth_header(const GroundTruth& gt) {
    nlohmann::json j;
    j["format"] = Bundle::kFormat;
    j["m"] = gt.m;
    j["n"] = gt.n;
    j["rank"] = gt.rank();
    j["sigma"] = gt.sigma;
    j["symmetric"] = gt.symmetric;
    j["eigen_signs"] = gt.eigen_signs;
    j["sampler"] = gt.sampler.label();
    j["seed"] = gt.seed;
    return j;
}

/// Writes stem.json and stem.bin; `stem` may carry a .json extension.
inline void write_bundle(const std::filesystem::path& stem_in, const GroundTruth& gt) {
    std::filesystem::path stem = stem_in;
    if (stem.extension() == ".json") stem.replace_extension();
    auto jpath = stem, bpath = stem;
    jpath += ".json";
    bpath += ".bin";
    nlohmann::json j = truth_header(gt);
    j["data"] = bpath.filename().string();
    std::ofstream jo(jpath);
    if (!jo) throw std::runtime_error("cannot write " + jpath.string());
    jo << j.dump(2) << "\n";
    std::ofstream bo(bpath, std::ios::binary);
    if (!bo) throw std::runtime_error("cannot write " + bpath.string());
    for (Index c = 0; c < gt.left.cols(); ++c)
        for (Index r = 0; r < gt.left.rows(); ++r) detail::write_f64(bo, gt.left(r, c));
    for (Index c = 0; c < gt.right.cols(); ++c)
        for (Index r = 0; r < gt.right.rows(); ++r) detail::write_f64(bo, gt.right(r, c));
}

inline GroundTruth read_bundle(const std::filesystem::path& stem_in) {
    std::filesystem::path jpath = stem_in;
    if (jpath.extension() != ".json") jpath += ".json";
    std::ifstream ji(jpath);
    if (!ji) throw ParseError("bundle: cannot open " + jpath.string(), 0);
    nlohmann::json j;
    try {
        ji >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bundle: ") + e.what(), 0);
    }
    if (j.value("format", "") != Bundle::kFormat) throw ParseError("bundle: unknown format", 0);
    GroundTruth gt;
    try {
        gt.m = j.at("m").get<Index>();
        gt.n = j.at("n").get<Index>();
        gt.sigma = j.at("sigma").get<std::vector<double>>();
        gt.symmetric = j.at("symmetric").get<bool>();
        gt.eigen_signs = j.at("eigen_signs").get<std::vector<int>>();
        gt.sampler = Sampler::parse(j.at("sampler").get<std::string>());
        gt.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bundle: ") + e.what(), 0);
    }
    const Index r = static_cast<Index>(gt.sigma.size());
    if (gt.m < 1 || gt.n < 1 || r < 1 || j.value("rank", r) != r) throw ParseError("bundle: bad dimensions", 0);
    if (gt.symmetric && Index(gt.eigen_signs.size()) != r) throw ParseError("bundle: eigen_signs length", 0);
    const auto bpath = jpath.parent_path() / j.value("data", jpath.stem().string() + ".bin");
    std::ifstream bi(bpath, std::ios::binary);
    if (!bi) throw ParseError("bundle: cannot open " + bpath.string(), 0);
    gt.left.resize(gt.m, r);
    gt.right.resize(gt.n, r);
    for (Index c = 0; c < r; ++c)
        for (Index i = 0; i < gt.m; ++i) gt.left(i, c) = detail::read_f64(bi);
    for (Index c = 0; c < r; ++c)
        for (Index i = 0; i < gt.n; ++i) gt.right(i, c) = detail::read_f64(bi);
    return gt;
}

}  // namespace spc
