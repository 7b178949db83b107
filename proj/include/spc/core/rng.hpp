#pragma once

#include <cstdint>
#include <random>

namespace spc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream splitting rule: every consumer derives its generator from
// (seed, stream tag, index) so results never depend on call order.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ stream);
    s = splitmix64(s ^ index);
    return Rng(s);
}

namespace stream {
constexpr std::uint64_t ground_truth = 0x6774;
constexpr std::uint64_t mask = 0x6d61736b;
constexpr std::uint64_t split = 0x73706c74;
constexpr std::uint64_t solver = 0x736f6c76;
constexpr std::uint64_t tree = 0x74726565;
}  // namespace stream

}  // namespace spc
