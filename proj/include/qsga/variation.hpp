#pragma once

/// @file variation.hpp
/// Single-point crossover and per-bit mutation, both as coupled deterministic
/// maps (driven by explicit random inputs) and as exact kernel probabilities.

#include <cmath>
#include <span>
#include <utility>

#include "qsga/core.hpp"
#include "qsga/errors.hpp"

namespace qsga {

struct CrossoverParams {
    double p_c = 0.0;
    std::size_t length = 1;
};

struct MutationParams {
    double p_m = 0.0;
    std::size_t length = 1;
};

namespace detail {

/// out = first k positions of u, remaining positions of v.
inline void switch_words(std::size_t k, std::span<const Word> u, std::span<const Word> v,
                         std::span<Word> out) {
    const std::size_t full = k / 64;
    const std::size_t rem = k % 64;
    for (std::size_t w = 0; w < out.size(); ++w) {
        if (w < full)
            out[w] = u[w];
        else if (w == full && rem != 0) {
            const Word lo = (Word{1} << rem) - 1;
            out[w] = (u[w] & lo) | (v[w] & ~lo);
        } else
            out[w] = v[w];
    }
}

} // namespace detail

/// switch(k, u, v): first k bits of u followed by the last l-k bits of v, 1 <= k <= l-1.
inline Chromosome switch_at(std::size_t k, ChromosomeView u, ChromosomeView v) {
    if (u.length != v.length) throw invalid_argument("switch: chromosome lengths differ");
    if (k < 1 || k + 1 > u.length) throw invalid_argument("switch: cut position out of range");
    Chromosome out(u.length);
    detail::switch_words(k, u.words, v.words, out.words());
    return out;
}

/// The coupled crossover map applied to an ordered pair:
/// flag 0 leaves (u, v) unchanged, flag 1 returns (switch(k,u,v), switch(k,v,u)).
/// With l = 1 there is no cut position and the pair is always returned unchanged.
inline std::pair<Chromosome, Chromosome> crossover_pair(ChromosomeView u, ChromosomeView v, bool flag,
                                                        std::size_t k) {
    if (u.length != v.length) throw invalid_argument("crossover: chromosome lengths differ");
    if (!flag || u.length == 1) return {Chromosome(u), Chromosome(v)};
    return {switch_at(k, u, v), switch_at(k, v, u)};
}

/// Exact crossover kernel C((u,v), (u2,v2)).
inline double crossover_prob(const CrossoverParams& params, ChromosomeView u, ChromosomeView v,
                             ChromosomeView u2, ChromosomeView v2) {
    const std::size_t l = params.length;
    if (u.length != l || v.length != l || u2.length != l || v2.length != l)
        throw invalid_argument("crossover_prob: chromosome lengths differ from params");
    const bool same = (u == u2) && (v == v2);
    if (l == 1) return same ? 1.0 : 0.0;
    std::size_t cuts = 0;
    for (std::size_t k = 1; k < l; ++k)
        if (switch_at(k, u, v) == Chromosome(u2) && switch_at(k, v, u) == Chromosome(v2)) ++cuts;
    return (1.0 - params.p_c) * (same ? 1.0 : 0.0) +
           params.p_c / static_cast<double>(l - 1) * static_cast<double>(cuts);
}

/// Flips position j of u exactly where mask position j is 1.
inline Chromosome mutate(ChromosomeView u, ChromosomeView mask) {
    if (u.length != mask.length) throw invalid_argument("mutate: mask length differs from chromosome");
    Chromosome out(u.length);
    auto w = out.words();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = u.words[k] ^ mask.words[k];
    return out;
}

/// ln M(u, v) = H ln p_M + (l - H) ln(1 - p_M), with 0 ln 0 = 0.
inline double log_mutation_prob(const MutationParams& params, std::size_t distance) {
    const double h = static_cast<double>(distance);
    const double rest = static_cast<double>(params.length - distance);
    const double a = distance == 0 ? 0.0 : h * std::log(params.p_m);
    const double b = distance == params.length ? 0.0 : rest * std::log1p(-params.p_m);
    return a + b;
}

/// Mutation kernel M(u, v) = p_M^H (1-p_M)^(l-H).
inline double mutation_prob(const MutationParams& params, ChromosomeView u, ChromosomeView v) {
    if (u.length != params.length || v.length != params.length)
        throw invalid_argument("mutation_prob: chromosome lengths differ from params");
    const std::size_t h = hamming(u, v);
    if (params.p_m < 1e-3) return std::exp(log_mutation_prob(params, h));
    return std::pow(params.p_m, static_cast<double>(h)) *
           std::pow(1.0 - params.p_m, static_cast<double>(params.length - h));
}

} // namespace qsga
