#pragma once

/// @file random.hpp
/// Random streams and seed derivation.
///
/// Every trajectory owns a Stream. Streams for independent trials are derived
/// from a 64-bit master seed by hashing (master, trial index, purpose tag), so a
/// trial's randomness does not depend on which worker runs it or in what order.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace qsga {

/// splitmix64 finalizer; used only to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a purpose tag, so tags can be written as readable strings.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based split: seed for trial `trial` and purpose `tag` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                                    std::string_view tag) noexcept {
    return mix64(mix64(master ^ tag_hash(tag)) + mix64(trial + 0x632be59bd9b4e019ULL));
}

/// A single sequential random stream. Satisfies UniformRandomBitGenerator so
/// standard distributions can draw from it.
class Stream {
  public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t seed = 0) : engine_(mix64(seed)) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0,1].
    double uniform_open_left() { return 1.0 - uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer on [lo, hi] (inclusive), unbiased by rejection.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo;
        if (span == std::numeric_limits<std::uint64_t>::max()) return engine_();
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % range;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return lo + r % range;
    }

    std::uint64_t binomial(std::uint64_t n, double p) {
        if (n == 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::binomial_distribution<std::uint64_t> d(n, p);
        return d(*this);
    }

    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        std::poisson_distribution<std::uint64_t> d(mean);
        return d(*this);
    }

  private:
    std::mt19937_64 engine_;
};

/// Small counter-based generator for short-lived per-step streams (tie-breaking
/// shuffles), where seeding a Mersenne Twister would dominate the cost.
class SplitMix {
  public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}
    std::uint64_t operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Uniform on [0, n) by multiply-shift with rejection (Lemire).
    std::uint64_t below(std::uint64_t n) {
        unsigned __int128 prod = static_cast<unsigned __int128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(prod);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                prod = static_cast<unsigned __int128>((*this)()) * n;
                low = static_cast<std::uint64_t>(prod);
            }
        }
        return static_cast<std::uint64_t>(prod >> 64);
    }

  private:
    std::uint64_t state_;
};

/// Number of failures before the first success of Bernoulli(p) trials, given
/// log1p(-p). Used to place mutation flips without one draw per bit.
inline std::uint64_t geometric_gap(Stream& rng, double log1m_p) {
    const double g = std::floor(std::log(rng.uniform_open_left()) / log1m_p);
    if (!(g < 9.0e18)) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(g);
}

} // namespace qsga
