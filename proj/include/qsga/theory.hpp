#pragma once

/// @file theory.hpp
/// The critical parameter pi, the binomial rate function I(p,t), the one-step
/// and path costs V_1 / V_l / V of the auxiliary chain, the drift map phi and
/// its fixed point rho*, Galton-Watson comparison processes, and numerical
/// checks of the elementary probability bounds used along the way.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qsga/errors.hpp"
#include "qsga/random.hpp"
#include "qsga/selection.hpp"

namespace qsga {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// pi and the regimes.

/// pi = sigma (1 - p_C)(1 - p_M)^l, with the power taken as exp(l log(1 - p_M)).
inline double pi_param(double sigma, double p_c, double p_m, std::size_t l) {
    if (!(sigma >= 1.0)) throw invalid_argument("pi: sigma must be >= 1");
    if (!(p_c >= 0.0 && p_c <= 1.0) || !(p_m >= 0.0 && p_m <= 1.0))
        throw invalid_argument("pi: probabilities must lie in [0,1]");
    const double survive = p_m >= 1.0 ? 0.0 : std::exp(static_cast<double>(l) * std::log1p(-p_m));
    return sigma * (1.0 - p_c) * survive;
}

enum class Regime { disordered, critical, quasispecies };

inline Regime regime_of(double pi) {
    if (pi < 1.0) return Regime::disordered;
    if (pi > 1.0) return Regime::quasispecies;
    return Regime::critical;
}

inline const char* regime_name(Regime r) {
    switch (r) {
    case Regime::disordered: return "disordered";
    case Regime::critical: return "critical";
    case Regime::quasispecies: return "quasispecies";
    }
    return "";
}

struct RegimeParams {
    double sigma = 1.0;
    double p_c = 0.0;
    double survive = 1.0; ///< (1 - p_M)^l

    double pi() const { return sigma * (1.0 - p_c) * survive; }
    Regime regime() const { return regime_of(pi()); }
};

/// p_M giving (1 - p_M)^l = survive.
inline double mutation_for_survive(double survive, std::size_t l) {
    if (!(survive > 0.0 && survive <= 1.0)) throw invalid_argument("survive probability must lie in (0,1]");
    return -std::expm1(std::log(survive) / static_cast<double>(l));
}

// ---------------------------------------------------------------------------
// Rate functions.

/// I(p, t): t ln(t/p) + (1-t) ln((1-t)/(1-p)) for 0 < p < 1, 0 <= t <= 1;
/// 0 when t = p in {0, 1}; +infinity when p in {0,1} and t != p, or t > 1, or p > 1.
inline double binomial_rate(double p, double t) {
    if (!(p >= 0.0) || !(t >= 0.0)) throw invalid_argument("binomial_rate: arguments must be >= 0");
    if (t > 1.0 || p > 1.0) return kInf;
    if (p == 0.0 || p == 1.0) return t == p ? 0.0 : kInf;
    const double a = t == 0.0 ? 0.0 : t * std::log(t / p);
    const double b = t == 1.0 ? 0.0 : (1.0 - t) * std::log((1.0 - t) / (1.0 - p));
    return std::max(0.0, a + b);
}

/// phi(r) = (1 - F(1 - r)) pi / sigma.
inline double phi_map(const SelectionScheme& scheme, double pi, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw invalid_argument("phi: r must lie in [0,1]");
    return (1.0 - limit_repartition(scheme, 1.0 - r)) * pi / drift(scheme);
}

/// Nonzero fixed point of phi by bisection on phi(r)/r - 1, which is
/// decreasing on (0,1] because phi is concave with phi(0) = 0. Returns 0 when pi <= 1.
inline double rho_star(const SelectionScheme& scheme, double pi, double tol = 1e-12) {
    const double sigma = drift(scheme);
    if (!(pi > 0.0)) throw invalid_argument("rho_star: pi must be > 0");
    if (pi > sigma * (1.0 + 1e-12)) throw invalid_argument("rho_star: pi cannot exceed sigma");
    if (pi <= 1.0) return 0.0;
    auto g = [&](double r) { return phi_map(scheme, pi, r) - r; };
    if (g(1.0) >= 0.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    // phi(r) > r just above 0 since phi'(0) = pi > 1; find a positive point first.
    double probe = 0.5;
    while (!(g(probe) > 0.0)) {
        hi = probe;
        probe *= 0.5;
        if (probe < 1e-300) return 0.0;
    }
    lo = probe;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Closed forms of rho* where they are consistent with phi(rho) = rho:
/// linear ranking 2 eta+ / (eta+ - eta-) (1 - 1/pi); tournament t = 2: 2 - sigma/pi.
inline std::optional<double> rho_star_closed_form(const SelectionScheme& scheme, double pi) {
    if (pi <= 1.0) return 0.0;
    if (scheme.kind == SchemeKind::linear_ranking && scheme.eta_plus > scheme.eta_minus)
        return std::min(1.0, 2.0 * scheme.eta_plus / (scheme.eta_plus - scheme.eta_minus) * (1.0 - 1.0 / pi));
    if (scheme.kind == SchemeKind::tournament && scheme.t == 2) return std::min(1.0, 2.0 - 2.0 / pi);
    return std::nullopt;
}

struct V1Value {
    double value = kInf;
    double p_star = 0.0;
    double beta_star = 0.0;
};

namespace detail {

/// beta I(q, t / beta) with the beta = 0 limit (only reachable with t = 0).
inline double scaled_rate(double q, double t, double beta) {
    if (beta == 0.0) return t == 0.0 ? 0.0 : kInf;
    return beta * binomial_rate(q, t / beta);
}

/// min over t <= beta <= 1 of 1/2 I(a, beta) + beta I(q, t/beta) for fixed a = 1 - p.
inline std::pair<double, double> v1_inner(double a, double q, double t) {
    auto g = [&](double beta) { return 0.5 * binomial_rate(a, beta) + scaled_rate(q, t, beta); };
    if (a >= 1.0 || t >= 1.0) return {g(1.0), 1.0};
    if (q >= 1.0) return {g(t), t};
    // The objective is convex in beta and its derivative
    //   1/2 ln(beta (1-a) / ((1-beta) a)) + ln((beta - t) / (beta (1-q)))
    // runs from -infinity at beta = t to +infinity at beta = 1.
    auto dg = [&](double beta) {
        return 0.5 * std::log(beta * (1.0 - a) / ((1.0 - beta) * a)) + std::log((beta - t) / (beta * (1.0 - q)));
    };
    double lo = t, hi = 1.0;
    for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dg(mid) < 0.0 ? lo : hi) = mid;
    }
    const double beta = 0.5 * (lo + hi);
    return {g(beta), beta};
}

} // namespace detail

/// V_1(s, t) = inf over 0 <= p <= 1 - pi/sigma, t <= beta <= 1 of
///   1/2 I(1 - p, beta) + beta I(phi(s)/(1 - p), t/beta),
/// with V_1(0,0) = 0 and V_1(0,t) = +infinity for t > 0.
///
/// The minimization over beta is exact (convex, by bisection on the
/// derivative). p is scanned on a grid of step `p_step`, then refined by a
/// golden-section search around the best grid point.
inline V1Value v1(const SelectionScheme& scheme, double pi, double s, double t, double p_step = 1.0 / 512.0) {
    if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0)) throw invalid_argument("V_1: s, t must lie in [0,1]");
    const double sigma = drift(scheme);
    if (pi > sigma * (1.0 + 1e-12)) throw invalid_argument("V_1: pi cannot exceed sigma");
    if (!(p_step > 0.0)) throw invalid_argument("V_1: p_step must be > 0");
    if (s == 0.0) return t == 0.0 ? V1Value{0.0, 0.0, 0.0} : V1Value{};
    const double q0 = phi_map(scheme, pi, s);
    const double p_max = std::max(0.0, 1.0 - pi / sigma);

    auto eval = [&](double p) {
        const double a = 1.0 - p;
        return detail::v1_inner(a, std::min(1.0, q0 / a), t);
    };
    V1Value best;
    // Grid 0, p_step, 2 p_step, ... plus the endpoint p_max.
    std::vector<double> grid;
    for (double p = 0.0; p < p_max; p += p_step) grid.push_back(p);
    grid.push_back(p_max);
    for (double p : grid) {
        const auto [val, beta] = eval(p);
        if (val < best.value) best = {val, p, beta};
    }
    if (p_max > 0.0 && best.value < kInf) {
        // Golden-section refinement on the bracket around the best grid point.
        const double centre = best.p_star;
        double lo = std::max(0.0, centre - p_step), hi = std::min(p_max, centre + p_step);
        const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
        double fc = eval(c).first, fd = eval(d).first;
        for (int it = 0; it < 50 && hi - lo > 1e-13; ++it) {
            if (fc < fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - invphi * (hi - lo);
                fc = eval(c).first;
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + invphi * (hi - lo);
                fd = eval(d).first;
            }
        }
        const double p = 0.5 * (lo + hi);
        if (p > 0.0) {
            const auto [val, beta] = eval(p);
            if (val < best.value) best = {val, p, beta};
        }
    }
    best.value = std::max(0.0, best.value);
    return best;
}

/// A cost function sampled on the lattice {0, h, 2h, ..., 1}^2, h = 1/n.
struct RateGrid {
    std::size_t n = 0;           ///< lattice intervals per axis; resolution h = 1/n
    std::vector<double> value;   ///< row-major (s index, t index)
    std::vector<double> p_star;  ///< V_1 minimizers, empty for composed grids
    std::vector<double> beta_star;

    double resolution() const { return 1.0 / static_cast<double>(n); }
    std::size_t points() const { return n + 1; }
    double coord(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(n); }
    double& at(std::size_t i, std::size_t j) { return value[i * (n + 1) + j]; }
    double at(std::size_t i, std::size_t j) const { return value[i * (n + 1) + j]; }

    /// Index of the lattice point nearest to x in [0,1].
    std::size_t nearest(double x) const {
        const double k = std::round(std::clamp(x, 0.0, 1.0) * static_cast<double>(n));
        return static_cast<std::size_t>(k);
    }
    /// Value at the lattice point nearest to (s, t).
    double lookup(double s, double t) const { return at(nearest(s), nearest(t)); }
};

/// V_1 on the lattice of `n` intervals per axis. Rows are computed by
/// `workers` threads, each writing only its own rows.
inline RateGrid build_v1_grid(const SelectionScheme& scheme, double pi, std::size_t n = 256,
                              double p_step = 1.0 / 512.0, std::size_t workers = 1) {
    if (n == 0) throw invalid_argument("rate grid needs n >= 1");
    RateGrid g;
    g.n = n;
    const std::size_t k = n + 1;
    g.value.assign(k * k, kInf);
    g.p_star.assign(k * k, 0.0);
    g.beta_star.assign(k * k, 0.0);
    auto fill_rows = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < k; i += stride)
            for (std::size_t j = 0; j < k; ++j) {
                const auto r = v1(scheme, pi, g.coord(i), g.coord(j), p_step);
                g.value[i * k + j] = r.value;
                g.p_star[i * k + j] = r.p_star;
                g.beta_star[i * k + j] = r.beta_star;
            }
    };
    workers = std::max<std::size_t>(1, std::min(workers, k));
    if (workers == 1) {
        fill_rows(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(fill_rows, w, workers);
        for (auto& th : pool) th.join();
    }
    return g;
}

/// Min-plus product (a (x) b)(s, u) = min_t a(s,t) + b(t,u).
inline RateGrid min_plus(const RateGrid& a, const RateGrid& b) {
    if (a.n != b.n) throw invalid_argument("min_plus: lattice sizes differ");
    RateGrid c;
    c.n = a.n;
    const std::size_t k = a.points();
    c.value.assign(k * k, kInf);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            const double ait = a.at(i, t);
            if (ait == kInf) continue;
            for (std::size_t j = 0; j < k; ++j) {
                const double v = ait + b.at(t, j);
                if (v < c.value[i * k + j]) c.value[i * k + j] = v;
            }
        }
    return c;
}

/// V_l = V_1 (x) ... (x) V_1 (l factors) on the lattice.
inline RateGrid v_compose(const RateGrid& v1_grid, std::size_t l) {
    if (l == 0) throw invalid_argument("v_compose: l must be >= 1");
    RateGrid out = v1_grid;
    out.p_star.clear();
    out.beta_star.clear();
    for (std::size_t step = 1; step < l; ++step) out = min_plus(out, v1_grid);
    return out;
}

/// V = inf over l >= 1 of V_l: the min-plus closure over non-empty lattice
/// paths, by Floyd-Warshall without resetting the diagonal.
inline RateGrid v_closure(const RateGrid& v1_grid) {
    RateGrid d = v1_grid;
    d.p_star.clear();
    d.beta_star.clear();
    const std::size_t k = d.points();
    for (std::size_t mid = 0; mid < k; ++mid)
        for (std::size_t i = 0; i < k; ++i) {
            const double dim = d.at(i, mid);
            if (dim == kInf) continue;
            for (std::size_t j = 0; j < k; ++j) {
                const double v = dim + d.at(mid, j);
                if (v < d.at(i, j)) d.at(i, j) = v;
            }
        }
    return d;
}

// ---------------------------------------------------------------------------
// Galton-Watson processes.

inline constexpr double kPmfTruncation = 1e-12;

namespace detail {

/// Poisson(lambda) pmf truncated once the remaining tail mass is below `tail`.
inline std::vector<double> poisson_pmf(double lambda, double tail = kPmfTruncation) {
    if (!(lambda >= 0.0)) throw invalid_argument("poisson pmf: lambda must be >= 0");
    if (lambda == 0.0) return {1.0};
    std::vector<double> pmf;
    double cdf = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double kd = static_cast<double>(k);
        const double v = std::exp(kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0));
        pmf.push_back(v);
        cdf += v;
        if (kd > lambda && 1.0 - cdf < tail) break;
        if (k > 100000) break;
    }
    return pmf;
}

} // namespace detail

enum class LawKind { twice_poisson, nu_star, custom };

/// Offspring law of a Galton-Watson process.
///
/// - twice_poisson(sigma): 2 Y with Y ~ Poisson(4 sigma), mean 8 sigma
/// - nu_star(pi, eps): Y' + 2 Y'' with Y' ~ Poisson(pi (1 + 3 eps)), Y'' ~ Poisson(eps),
///   mean pi (1 + 3 eps) + 2 eps
/// - custom: an explicit pmf
class ReproductionLaw {
  public:
    static ReproductionLaw twice_poisson(double sigma) {
        if (!(sigma > 0.0)) throw invalid_argument("twice-poisson law needs sigma > 0");
        ReproductionLaw law(LawKind::twice_poisson);
        law.a_ = 4.0 * sigma;
        const auto y = detail::poisson_pmf(law.a_);
        law.pmf_.assign(2 * y.size() - 1, 0.0);
        for (std::size_t k = 0; k < y.size(); ++k) law.pmf_[2 * k] = y[k];
        return law;
    }

    /// Default eps keeps pi (1 + 3 eps) + 2 eps < 1 when pi < 1.
    static double default_eps(double pi) { return std::min(0.01, (1.0 / pi - 1.0) / 10.0); }

    static ReproductionLaw nu_star(double pi, std::optional<double> eps = std::nullopt) {
        if (!(pi > 0.0)) throw invalid_argument("nu* law needs pi > 0");
        const double e = eps ? *eps : default_eps(pi);
        if (!(e > 0.0)) throw invalid_argument("nu* law needs eps > 0 (pi < 1 for the default)");
        ReproductionLaw law(LawKind::nu_star);
        law.a_ = pi * (1.0 + 3.0 * e);
        law.b_ = e;
        const auto y1 = detail::poisson_pmf(law.a_);
        const auto y2 = detail::poisson_pmf(law.b_);
        law.pmf_.assign(y1.size() + 2 * (y2.size() - 1), 0.0);
        for (std::size_t i = 0; i < y1.size(); ++i)
            for (std::size_t j = 0; j < y2.size(); ++j) law.pmf_[i + 2 * j] += y1[i] * y2[j];
        return law;
    }

    static ReproductionLaw custom(std::vector<double> pmf) {
        double s = 0.0;
        for (double v : pmf) {
            if (!(v >= 0.0)) throw invalid_argument("custom law: negative mass");
            s += v;
        }
        if (std::abs(s - 1.0) > kPmfTruncation) throw invalid_argument("custom law: pmf must sum to 1");
        ReproductionLaw law(LawKind::custom);
        law.pmf_ = std::move(pmf);
        return law;
    }

    LawKind kind() const { return kind_; }
    const std::vector<double>& pmf() const { return pmf_; }
    /// Largest offspring count kept after truncation.
    std::size_t truncation_point() const { return pmf_.empty() ? 0 : pmf_.size() - 1; }

    /// Exact mean of the untruncated law.
    double mean() const {
        switch (kind_) {
        case LawKind::twice_poisson: return 2.0 * a_;
        case LawKind::nu_star: return a_ + 2.0 * b_;
        case LawKind::custom: break;
        }
        double m = 0.0;
        for (std::size_t k = 0; k < pmf_.size(); ++k) m += static_cast<double>(k) * pmf_[k];
        return m;
    }

    /// Generating function on the truncated pmf.
    double generating(double q) const {
        double acc = 0.0;
        for (std::size_t k = pmf_.size(); k-- > 0;) acc = acc * q + pmf_[k];
        return acc;
    }

    /// Total offspring of `parents` individuals.
    std::uint64_t offspring(std::uint64_t parents, Stream& rng) const {
        if (parents == 0) return 0;
        const double z = static_cast<double>(parents);
        switch (kind_) {
        case LawKind::twice_poisson: return 2 * rng.poisson(a_ * z);
        case LawKind::nu_star: return rng.poisson(a_ * z) + 2 * rng.poisson(b_ * z);
        case LawKind::custom: break;
        }
        std::discrete_distribution<std::uint64_t> d(pmf_.begin(), pmf_.end());
        std::uint64_t total = 0;
        for (std::uint64_t i = 0; i < parents; ++i) total += d(rng);
        return total;
    }

  private:
    explicit ReproductionLaw(LawKind k) : kind_(k) {}
    LawKind kind_;
    double a_ = 0.0, b_ = 0.0;
    std::vector<double> pmf_;
};

/// Sizes Z_0 = z0, Z_1, ..., Z_generations. Stops early (path shorter) once
/// the population exceeds `cap`, to keep supercritical runs bounded.
inline std::vector<std::uint64_t> gw_simulate(const ReproductionLaw& law, std::size_t generations, Stream& rng,
                                              std::uint64_t z0 = 1, std::uint64_t cap = 1'000'000'000'000ULL) {
    std::vector<std::uint64_t> path{z0};
    for (std::size_t n = 0; n < generations && path.back() <= cap; ++n)
        path.push_back(law.offspring(path.back(), rng));
    return path;
}

/// Smallest fixed point of the generating function, by iteration from 0.
inline double gw_extinction(const ReproductionLaw& law, double tol = 1e-12, std::size_t max_iter = 100'000'000) {
    double q = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const double next = law.generating(q);
        if (std::abs(next - q) < tol) return next;
        q = next;
    }
    return q;
}

// ---------------------------------------------------------------------------
// Elementary bounds.

/// P(Y >= t) <= (lambda e / t)^t for Y ~ Poisson(lambda), t >= lambda > 0.
inline double poisson_tail_bound(double lambda, double t) {
    if (!(lambda > 0.0)) throw domain_error("poisson_tail_bound: lambda must be > 0");
    if (t < lambda) throw domain_error("poisson_tail_bound: requires t >= lambda");
    return std::exp(t * (std::log(lambda) + 1.0 - std::log(t)));
}

/// P(Y >= t) for Y ~ Poisson(lambda), summed upward from ceil(t).
inline double poisson_tail_exact(double lambda, double t) {
    if (!(lambda > 0.0)) throw domain_error("poisson_tail_exact: lambda must be > 0");
    const double k0 = std::max(0.0, std::ceil(t));
    double acc = 0.0;
    for (double k = k0;; k += 1.0) {
        const double v = std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
        acc += v;
        if (k > lambda && v < acc * 1e-17) break;
        if (k > k0 + 1e6) break;
    }
    return std::min(1.0, acc);
}

/// Binomial(n, p) pmf.
inline std::vector<double> binomial_pmf(std::size_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw invalid_argument("binomial pmf: p must lie in [0,1]");
    std::vector<double> pmf(n + 1);
    const double nd = static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        if (p == 0.0) pmf[k] = k == 0 ? 1.0 : 0.0;
        else if (p == 1.0) pmf[k] = k == n ? 1.0 : 0.0;
        else
            pmf[k] = std::exp(std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                              kd * std::log(p) + (nd - kd) * std::log1p(-p));
    }
    return pmf;
}

inline std::vector<double> poisson_pmf(double lambda) { return detail::poisson_pmf(lambda); }

/// d1 is stochastically dominated by d2: CDF(d1) >= CDF(d2) at every point of
/// the truncated supports, up to the truncation tolerance.
inline bool dominance_check(const std::vector<double>& d1, const std::vector<double>& d2) {
    const std::size_t n = std::max(d1.size(), d2.size());
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k < d1.size()) c1 += d1[k];
        if (k < d2.size()) c2 += d2[k];
        if (c1 < c2 - kPmfTruncation) return false;
    }
    return true;
}

/// Cramer transform of alpha Y, Y ~ Poisson(lambda):
///   (x/alpha) ln(x / (lambda alpha)) - x/alpha + lambda, with 0 ln 0 = 0.
inline double cramer_poisson(double lambda, double alpha, double x) {
    if (!(lambda > 0.0)) throw domain_error("cramer_poisson: lambda must be > 0");
    if (alpha == 0.0) throw domain_error("cramer_poisson: alpha must be non-zero");
    const double r = x / (lambda * alpha);
    if (r < 0.0 || !std::isfinite(r)) throw domain_error("cramer_poisson: x/(lambda alpha) must be >= 0");
    const double y = x / alpha;
    return (r == 0.0 ? 0.0 : y * std::log(r)) - y + lambda;
}

/// Cramer transform of alpha X, X ~ Binomial(n, p), by direct maximization of
/// theta x - n ln(1 - p + p e^(alpha theta)) over theta.
inline double cramer_binomial_numeric(std::size_t n, double p, double alpha, double x) {
    const double nd = static_cast<double>(n);
    auto objective = [&](double theta) {
        const double z = alpha * theta;
        // ln(1 - p + p e^z) evaluated stably for large |z|.
        const double lse = z > 0.0 ? z + std::log(p + (1.0 - p) * std::exp(-z)) : std::log1p(p * std::expm1(z));
        return theta * x - nd * lse;
    };
    // Concave in theta: bracket the maximum by doubling, then golden section.
    double lo = -1.0, hi = 1.0;
    while (hi < 1e4 && objective(hi) > objective(hi / 2.0)) hi *= 2.0;
    while (lo > -1e4 && objective(lo) > objective(lo / 2.0)) lo *= 2.0;
    const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
    double fc = objective(c), fd = objective(d);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = objective(d);
        }
    }
    return std::max({fc, fd, objective(0.0)});
}

struct CramerDominance {
    bool verified = true;
    double worst_margin = kInf; ///< min over the grid of Lambda*_{alpha X} - Lambda*_{alpha Y}
    std::size_t points = 0;
};

/// Checks Lambda*_{alpha X}(x) >= Lambda*_{alpha Y}(x) for X ~ Binomial(n,p),
/// Y ~ Poisson(np), on an evenly spaced grid of x between 0 and alpha n.
inline CramerDominance cramer_dominance(std::size_t n, double p, double alpha, std::size_t grid = 201) {
    if (n == 0 || !(p > 0.0 && p < 1.0)) throw invalid_argument("cramer_dominance: needs n >= 1, 0 < p < 1");
    if (alpha == 0.0) throw domain_error("cramer_dominance: alpha must be non-zero");
    if (grid < 2) throw invalid_argument("cramer_dominance: grid needs at least two points");
    const double lambda = static_cast<double>(n) * p;
    CramerDominance out;
    for (std::size_t k = 0; k < grid; ++k) {
        const double x = alpha * static_cast<double>(n) * static_cast<double>(k) / static_cast<double>(grid - 1);
        const double bx = cramer_binomial_numeric(n, p, alpha, x);
        const double py = cramer_poisson(lambda, alpha, x);
        const double margin = bx - py;
        out.worst_margin = std::min(out.worst_margin, margin);
        if (margin < -1e-9 * (1.0 + std::abs(py))) out.verified = false;
        ++out.points;
    }
    return out;
}

struct BinomialCoefficientCheck {
    double exact_log = 0.0; ///< ln C(n, k)
    double proxy = 0.0;     ///< -k ln(k/n) - (n-k) ln((n-k)/n)
    double lhs = 0.0;       ///< |exact_log - proxy|
    double bound = 0.0;     ///< 2 ln n + 3
    bool holds() const { return lhs <= bound; }
};

/// |ln C(n,k) + k ln(k/n) + (n-k) ln((n-k)/n)| <= 2 ln n + 3, with 0 ln 0 = 0.
inline BinomialCoefficientCheck log_binomial_bound_check(std::size_t n, std::size_t k) {
    if (n == 0 || k > n) throw invalid_argument("log_binomial_bound_check: needs 0 <= k <= n, n >= 1");
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    BinomialCoefficientCheck c;
    c.exact_log = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
    const double a = k == 0 ? 0.0 : kd * std::log(kd / nd);
    const double b = k == n ? 0.0 : (nd - kd) * std::log((nd - kd) / nd);
    c.proxy = -(a + b);
    c.lhs = std::abs(c.exact_log + a + b);
    c.bound = 2.0 * std::log(nd) + 3.0;
    return c;
}

/// P(X < t) <= exp(-2 (np - t)^2 / n) for X ~ Binomial(n, p), t < np.
inline double hoeffding_bound(std::size_t n, double p, double t) {
    const double np = static_cast<double>(n) * p;
    if (!(t < np)) throw domain_error("hoeffding_bound: requires t < np");
    return std::exp(-2.0 * (np - t) * (np - t) / static_cast<double>(n));
}

/// P(X < t) for X ~ Binomial(n, p), by summation.
inline double binomial_lower_tail(std::size_t n, double p, double t) {
    const auto pmf = binomial_pmf(n, p);
    double acc = 0.0;
    for (std::size_t k = 0; k <= n && static_cast<double>(k) < t; ++k) acc += pmf[k];
    return std::min(1.0, acc);
}

// ---------------------------------------------------------------------------
// Parameter advice.

struct ParameterAdvice {
    bool feasible = false;
    double p_m = 0.0;
    double p_c = 0.0;
    std::size_t m = 0;
    double achieved_pi = 0.0; ///< pi of the advice; the maximal pi when infeasible
    double rho_star = 0.0;
    std::string note;
};

/// p_M = c / l, p_C solving sigma (1 - p_C)(1 - p_M)^l = target_pi, m = ceil(l ln l)
/// (rounded up to an even number, at least 2), and rho*(target_pi).
inline ParameterAdvice advise_parameters(std::size_t l, const SelectionScheme& scheme, double target_pi,
                                         double c = 1.0) {
    const double sigma = drift(scheme);
    if (l == 0) throw invalid_argument("advise_parameters: l must be >= 1");
    if (!(target_pi > 1.0 && target_pi <= sigma))
        throw invalid_argument("advise_parameters: target pi must satisfy 1 < pi <= sigma");
    if (!(c > 0.0 && c <= static_cast<double>(l))) throw invalid_argument("advise_parameters: need 0 < c <= l");
    ParameterAdvice a;
    a.p_m = c / static_cast<double>(l);
    const double survive = a.p_m >= 1.0 ? 0.0 : std::exp(static_cast<double>(l) * std::log1p(-a.p_m));
    const double keep = target_pi / (sigma * survive);
    auto mm = static_cast<std::size_t>(std::ceil(static_cast<double>(l) * std::log(static_cast<double>(l))));
    if (mm % 2 != 0) ++mm;
    a.m = std::max<std::size_t>(2, mm);
    a.rho_star = rho_star(scheme, target_pi);
    if (!(keep <= 1.0)) {
        a.feasible = false;
        a.p_c = 0.0;
        a.achieved_pi = sigma * survive;
        a.note = "infeasible: even p_C = 0 gives pi = " + std::to_string(a.achieved_pi) +
                 "; lower p_M or raise the selection drift";
        return a;
    }
    a.feasible = true;
    a.p_c = std::clamp(1.0 - keep, 0.0, 1.0);
    a.achieved_pi = sigma * (1.0 - a.p_c) * survive;
    a.note = "persistence times grow exponentially in m; budget horizons accordingly";
    return a;
}

} // namespace qsga
