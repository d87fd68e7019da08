#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fibro {

// All stochastic code draws from mt19937_64; distributions come from
// boost::random, whose algorithms are fixed across platforms (unlike <random>).
using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent task seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// seed_i = splitmix64(master + golden * (i + 1)).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

double uniform01(Rng& rng);
double uniform_real(Rng& rng, double lo, double hi);
/// Uniform integer in [lo, hi] inclusive.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);
double normal(Rng& rng, double mean, double sd);
double beta(Rng& rng, double a, double b);

/// Fisher-Yates shuffle driven by uniform_int, so orderings are portable.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace fibro
