#pragma once

/// @file auxchain.hpp
/// The auxiliary chain (N_n) bounding from below the number of chromosomes
/// above a fitness level: pathwise evaluation from engine blocks, its exact
/// transition law, a direct sampler and hitting-time statistics.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "qsga/engine.hpp"
#include "qsga/errors.hpp"
#include "qsga/random.hpp"
#include "qsga/selection.hpp"

namespace qsga {

/// Parameters of the auxiliary chain. The law depends on (p_M, l) only
/// through survive = (1 - p_M)^l.
class AuxParams {
  public:
    AuxParams(std::size_t m, SelectionScheme scheme, double p_c, double survive)
        : m_(m), scheme_(std::move(scheme)), p_c_(p_c), survive_(survive) {
        if (m < 2 || m % 2 != 0) throw invalid_argument("aux chain: m must be even and >= 2");
        if (!(p_c >= 0.0 && p_c <= 1.0)) throw invalid_argument("aux chain: p_C must lie in [0,1]");
        if (!(survive > 0.0 && survive <= 1.0)) throw invalid_argument("aux chain: survive_prob must lie in (0,1]");
        table_ = SelectionTable(scheme_, m);
    }

    static AuxParams from_mutation(std::size_t m, SelectionScheme scheme, double p_c, double p_m, std::size_t l) {
        if (!(p_m >= 0.0 && p_m < 1.0)) throw invalid_argument("aux chain: p_M must lie in [0,1)");
        return AuxParams(m, std::move(scheme), p_c, std::exp(static_cast<double>(l) * std::log1p(-p_m)));
    }

    static AuxParams from_config(const GAConfig& c) {
        return AuxParams(c.size, c.scheme, c.p_c, c.survive_prob());
    }

    std::size_t size() const { return m_; }
    const SelectionScheme& scheme() const { return scheme_; }
    const SelectionTable& table() const { return table_; }
    double p_c() const { return p_c_; }
    double survive_prob() const { return survive_; }

    /// pi = sigma (1 - p_C) survive; absent for custom selection tables.
    std::optional<double> pi() const {
        if (scheme_.kind == SchemeKind::custom) return std::nullopt;
        return drift(scheme_) * (1.0 - p_c_) * survive_;
    }

  private:
    std::size_t m_;
    SelectionScheme scheme_;
    double p_c_;
    double survive_;
    SelectionTable table_;
};

/// eps_m(i) = (F_m(m-i+1) + ... + F_m(m)) (1 - p_M)^l.
inline double eps_m(const AuxParams& params, std::size_t i) {
    if (i > params.size()) throw invalid_argument("eps_m: i out of range");
    return params.table().top_mass(i) * params.survive_prob();
}

/// Psi(i) for every i in 0..m from one random block.
///
/// Member j contributes to Psi(i) when its selection uniform lands in the top
/// i ranks, its pair drew no crossover and its mutation row is zero.
inline std::vector<std::size_t> psi_table(const RandomBlock& block, const SelectionTable& table) {
    const std::size_t m = table.size();
    if (block.size != m) throw invalid_argument("psi: block size differs from m");
    std::vector<std::size_t> hist(m + 1, 0);
    for (std::size_t j = 0; j < m; ++j) {
        if (block.v[j / 2] || !block.mask_is_zero(j)) continue;
        const std::size_t rank = table.index_from_uniform(block.s[j]);
        ++hist[m - rank + 1]; // Gamma(i, j) = 1 exactly for i >= m - rank + 1
    }
    for (std::size_t i = 1; i <= m; ++i) hist[i] += hist[i - 1];
    return hist;
}

/// Psi_n(i) = sum_j Gamma_n(i, j) (1 - V_n^{ceil(j/2)}) prod_k (1 - U_n^{j,k}).
inline std::size_t psi_from_block(const RandomBlock& block, const SelectionTable& table, std::size_t i) {
    if (i > table.size()) throw invalid_argument("psi: i out of range");
    return psi_table(block, table)[i];
}

inline std::size_t psi_from_block(const RandomBlock& block, const SelectionScheme& scheme, std::size_t i) {
    return psi_from_block(block, SelectionTable(scheme, block.size), i);
}

/// One step of the chain: B ~ Binomial(m/2, 1 - p_C), then Binomial(2B, eps_m(i)).
inline std::size_t sample_step(const AuxParams& params, std::size_t i, Stream& rng) {
    if (i > params.size()) throw invalid_argument("sample_step: i out of range");
    if (i == 0) return 0;
    const std::uint64_t b = rng.binomial(params.size() / 2, 1.0 - params.p_c());
    return static_cast<std::size_t>(rng.binomial(2 * b, eps_m(params, i)));
}

namespace detail {

inline double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// k ln p with 0 ln 0 = 0.
inline double xlogy(double k, double p) { return k == 0.0 ? 0.0 : k * std::log(p); }

/// Binomial(n, p) probability of k, in log space.
inline double log_binom_pmf(std::size_t n, std::size_t k, double p) {
    if (k > n) return -INFINITY;
    if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) return k == n ? 0.0 : -INFINITY;
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    return log_choose(nd, kd) + xlogy(kd, p) + (nd - kd) * std::log1p(-p);
}

inline double binom_pmf_direct(std::size_t n, std::size_t k, double p) {
    if (k > n) return 0.0;
    double c = 1.0;
    for (std::size_t r = 1; r <= k; ++r) c = c * static_cast<double>(n - k + r) / static_cast<double>(r);
    return c * std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
}

} // namespace detail

/// Relative cutoff for b-sum terms in the log-space evaluation.
inline constexpr double kAuxTermCutoff = 1e-18;

/// P(i -> j) = sum_b C(m/2,b) (1-p_C)^b p_C^(m/2-b) C(2b,j) eps^j (1-eps)^(2b-j).
///
/// Up to m = 64 the double sum is evaluated term by term in linear space; above,
/// terms are formed in log space, rescaled by the largest, and terms below
/// kAuxTermCutoff relative to it are dropped.
inline double transition_prob(const AuxParams& params, std::size_t i, std::size_t j) {
    const std::size_t m = params.size();
    if (i > m || j > m) throw invalid_argument("transition_prob: state out of range");
    if (i == 0) return j == 0 ? 1.0 : 0.0;
    const double eps = eps_m(params, i);
    const double keep = 1.0 - params.p_c();
    const std::size_t half = m / 2;
    const std::size_t b_min = (j + 1) / 2;
    if (m <= 64) {
        double total = 0.0;
        for (std::size_t b = b_min; b <= half; ++b)
            total += detail::binom_pmf_direct(half, b, keep) * detail::binom_pmf_direct(2 * b, j, eps);
        return total;
    }
    std::vector<double> logs;
    logs.reserve(half + 1);
    double top = -INFINITY;
    for (std::size_t b = b_min; b <= half; ++b) {
        const double v = detail::log_binom_pmf(half, b, keep) + detail::log_binom_pmf(2 * b, j, eps);
        logs.push_back(v);
        top = std::max(top, v);
    }
    if (top == -INFINITY) return 0.0;
    const double floor_log = top + std::log(kAuxTermCutoff);
    double acc = 0.0;
    for (double v : logs)
        if (v >= floor_log) acc += std::exp(v - top);
    return std::exp(top) * acc;
}

/// The full row P(i, .) for states 0..m.
inline std::vector<double> transition_row(const AuxParams& params, std::size_t i) {
    std::vector<double> row(params.size() + 1);
    for (std::size_t j = 0; j <= params.size(); ++j) row[j] = transition_prob(params, i, j);
    return row;
}

/// E[N_{n+1} | N_n = i] = m (1 - p_C) eps_m(i).
inline double expected_next(const AuxParams& params, std::size_t i) {
    return static_cast<double>(params.size()) * (1.0 - params.p_c()) * eps_m(params, i);
}

// ---------------------------------------------------------------------------
// Hitting times.

enum class HitTarget {
    absorption, ///< tau_0 = inf{n >= 0 : N_n = 0}
    above,      ///< T(delta) = inf{n >= 0 : N_n > delta m}
    below,      ///< tau_delta = inf{n >= 0 : N_n < delta m}
};

enum class HitOutcome { absorbed, above, below, timeout };

inline const char* outcome_name(HitOutcome o) {
    switch (o) {
    case HitOutcome::absorbed: return "absorbed";
    case HitOutcome::above: return "above";
    case HitOutcome::below: return "below";
    case HitOutcome::timeout: return "timeout";
    }
    return "";
}

struct HitResult {
    std::size_t time = 0;  ///< hitting time, or the cap on timeout
    HitOutcome outcome = HitOutcome::timeout;
    std::size_t state = 0; ///< N at the stopping time
};

/// Runs the chain from `start` until the target boundary is reached or `cap`
/// generations have elapsed. An `above` target that is absorbed first reports
/// `absorbed`, since 0 is absorbing.
inline HitResult simulate_hitting(const AuxParams& params, std::size_t start, HitTarget target, double delta,
                                  std::size_t cap, Stream& rng) {
    const std::size_t m = params.size();
    if (start > m) throw invalid_argument("simulate_hitting: start out of range");
    if (target != HitTarget::absorption && !(delta >= 0.0 && delta <= 1.0))
        throw invalid_argument("simulate_hitting: delta must lie in [0,1]");
    const double level = delta * static_cast<double>(m);
    auto hit = [&](std::size_t n) -> std::optional<HitOutcome> {
        switch (target) {
        case HitTarget::absorption:
            if (n == 0) return HitOutcome::absorbed;
            break;
        case HitTarget::above:
            if (static_cast<double>(n) > level) return HitOutcome::above;
            if (n == 0) return HitOutcome::absorbed;
            break;
        case HitTarget::below:
            if (static_cast<double>(n) < level) return HitOutcome::below;
            break;
        }
        return std::nullopt;
    };
    std::size_t n = start;
    for (std::size_t t = 0;; ++t) {
        if (auto o = hit(n)) return {t, *o, n};
        if (t == cap) return {cap, HitOutcome::timeout, n};
        n = sample_step(params, n, rng);
    }
}

/// Burn-in used for quasi-stationary averages: 10 ceil(ln m).
inline std::size_t default_burn_in(std::size_t m) {
    return 10 * static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(m))));
}

struct QuasiStationary {
    double mean_fraction = 0.0; ///< time-average of N_n / m over the window
    bool absorbed = false;      ///< the chain hit 0 before the window closed
    std::size_t samples = 0;
};

/// Time-average of N_n / m over `window` generations after `burn_in`,
/// conditioned on non-absorption (an absorbed run is flagged and excluded).
inline QuasiStationary quasi_stationary(const AuxParams& params, std::size_t start, std::size_t burn_in,
                                        std::size_t window, Stream& rng) {
    QuasiStationary q;
    std::size_t n = start;
    double acc = 0.0;
    for (std::size_t t = 1; t <= burn_in + window; ++t) {
        n = sample_step(params, n, rng);
        if (n == 0) {
            q.absorbed = true;
            return q;
        }
        if (t > burn_in) {
            acc += static_cast<double>(n);
            ++q.samples;
        }
    }
    q.mean_fraction = acc / (static_cast<double>(q.samples) * static_cast<double>(params.size()));
    return q;
}

/// Fraction of `trials` runs from N_0 = 1 along which N_{n+1} > N_n at every
/// step until N_n >= target_fraction m.
inline double geometric_growth_frequency(const AuxParams& params, double target_fraction, std::size_t trials,
                                         Stream& rng) {
    if (!(target_fraction > 0.0 && target_fraction <= 1.0))
        throw invalid_argument("geometric growth: target fraction must lie in (0,1]");
    if (trials == 0) throw invalid_argument("geometric growth: trials must be >= 1");
    const double target = target_fraction * static_cast<double>(params.size());
    std::size_t grew = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        std::size_t n = 1;
        while (static_cast<double>(n) < target) {
            const std::size_t next = sample_step(params, n, rng);
            if (next <= n) break;
            n = next;
        }
        if (static_cast<double>(n) >= target) ++grew;
    }
    return static_cast<double>(grew) / static_cast<double>(trials);
}

} // namespace qsga
