#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <span>
#include <string_view>

namespace cadro {

using Rng = std::mt19937_64;

inline auto splitmix64(std::uint64_t x) -> std::uint64_t
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

/// Seed of the substream named `label` under `master`. Each purpose draws from
/// its own substream so that adding draws in one place never shifts another.
inline auto derive_seed(std::uint64_t master, std::string_view label) -> std::uint64_t
{
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(master ^ splitmix64(h));
}

inline auto derive_seed(std::uint64_t master, std::uint64_t index) -> std::uint64_t
{
    return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline auto substream(std::uint64_t master, std::string_view label) -> Rng
{
    return Rng{derive_seed(master, label)};
}

// The std distributions are implementation-defined; these are not, so results
// are reproducible across standard libraries.

/// Uniform in [0, 1).
inline auto uniform01(Rng& rng) -> double
{
    return static_cast<double>(rng() >> 11U) * 0x1.0p-53;
}

inline auto uniform(Rng& rng, double lo, double hi) -> double
{
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n).
inline auto uniform_index(Rng& rng, std::size_t n) -> std::size_t
{
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Standard normal draw (Box-Muller, one value per call).
inline auto standard_normal(Rng& rng) -> double
{
    double u1 = uniform01(rng);
    while (u1 <= 0.0) { u1 = uniform01(rng); }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Hash of the exact bytes of a real vector.
inline auto hash_values(std::span<const double> values, std::uint64_t seed) -> std::uint64_t
{
    std::uint64_t h = splitmix64(seed);
    for (double v : values) {
        std::uint64_t bits = 0;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(v));
        h = splitmix64(h ^ bits);
    }
    return h;
}

} // namespace cadro
