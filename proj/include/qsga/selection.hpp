#pragma once

/// @file selection.hpp
/// Ranking selection: the rank distributions F_m, random tie-breaking ranks,
/// the inverse-transform rank map used by the coupling, and the limit
/// repartition F with its drift sigma.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsga/core.hpp"
#include "qsga/errors.hpp"
#include "qsga/random.hpp"

namespace qsga {

enum class SchemeKind { linear_ranking, tournament, custom };

/// A ranking selection scheme. Ranks run 1..m with m the best.
struct SelectionScheme {
    SchemeKind kind = SchemeKind::tournament;
    double eta_minus = 0.0;
    double eta_plus = 2.0;
    std::size_t t = 2;
    std::vector<double> table; ///< custom only: F_m(1..m)

    static SelectionScheme linear_ranking(double eta_minus, double eta_plus) {
        SelectionScheme s;
        s.kind = SchemeKind::linear_ranking;
        s.eta_minus = eta_minus;
        s.eta_plus = eta_plus;
        return s;
    }
    static SelectionScheme tournament(std::size_t t) {
        SelectionScheme s;
        s.kind = SchemeKind::tournament;
        s.t = t;
        return s;
    }
    static SelectionScheme custom(std::vector<double> table) {
        SelectionScheme s;
        s.kind = SchemeKind::custom;
        s.table = std::move(table);
        return s;
    }

    /// Throws invalid_argument unless the scheme is usable with population size m.
    void validate(std::size_t m) const {
        if (m < 2) throw invalid_argument("selection needs m >= 2");
        switch (kind) {
        case SchemeKind::linear_ranking:
            if (!(eta_minus >= 0.0 && eta_minus <= eta_plus) || std::abs(eta_minus + eta_plus - 2.0) > 1e-12)
                throw invalid_argument("linear ranking needs 0 <= eta- <= eta+ and eta- + eta+ = 2");
            break;
        case SchemeKind::tournament:
            if (t < 2 || t > m) throw invalid_argument("tournament size must satisfy 2 <= t <= m");
            break;
        case SchemeKind::custom: {
            if (table.size() != m) throw invalid_argument("custom selection table must have m entries");
            double s = 0.0;
            for (double v : table) {
                if (!(v >= 0.0)) throw invalid_argument("custom selection table has a negative entry");
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-12) throw invalid_argument("custom selection table must sum to 1");
            break;
        }
        }
    }

    std::string name() const {
        switch (kind) {
        case SchemeKind::linear_ranking: return "linear-ranking";
        case SchemeKind::tournament: return "tournament";
        case SchemeKind::custom: return "custom";
        }
        return "";
    }
};

/// F_m(i) for 1 <= i <= m.
inline double selection_mass(const SelectionScheme& s, std::size_t m, std::size_t i) {
    if (m < 2) throw invalid_argument("selection_mass: m must be >= 2");
    if (i < 1 || i > m) throw invalid_argument("selection_mass: rank out of range");
    const double md = static_cast<double>(m);
    switch (s.kind) {
    case SchemeKind::linear_ranking:
        return (s.eta_minus + (s.eta_plus - s.eta_minus) * static_cast<double>(i - 1) / (md - 1.0)) / md;
    case SchemeKind::tournament: {
        // i^t - (i-1)^t over m^t, written as a difference of ratios to stay finite for large t.
        const double t = static_cast<double>(s.t);
        return std::pow(static_cast<double>(i) / md, t) - std::pow(static_cast<double>(i - 1) / md, t);
    }
    case SchemeKind::custom:
        if (s.table.size() != m) throw invalid_argument("custom selection table must have m entries");
        return s.table[i - 1];
    }
    return 0.0;
}

/// F_m tabulated for one population size, with the cumulative sums used by the
/// inverse-transform map and the top-tail sums used by the auxiliary chain.
class SelectionTable {
  public:
    SelectionTable() = default;
    SelectionTable(const SelectionScheme& scheme, std::size_t m) : scheme_(scheme), m_(m) {
        scheme.validate(m);
        mass_.resize(m);
        for (std::size_t i = 1; i <= m; ++i) mass_[i - 1] = selection_mass(scheme, m, i);

        // Neumaier-compensated prefix sums; the last cell absorbs the residual.
        cumulative_.resize(m);
        double sum = 0.0, comp = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = mass_[i];
            const double t = sum + v;
            comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
            sum = t;
            cumulative_[i] = sum + comp;
        }
        cumulative_[m - 1] = 1.0;

        // top_[i] = F_m(m-i+1) + ... + F_m(m), summed from the top for accuracy.
        top_.assign(m + 1, 0.0);
        sum = 0.0;
        comp = 0.0;
        for (std::size_t i = 1; i <= m; ++i) {
            const double v = mass_[m - i];
            const double t = sum + v;
            comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
            sum = t;
            top_[i] = sum + comp;
        }
    }

    std::size_t size() const { return m_; }
    const SelectionScheme& scheme() const { return scheme_; }
    double mass(std::size_t rank) const { return mass_[rank - 1]; }
    std::span<const double> masses() const { return mass_; }
    std::span<const double> cumulative() const { return cumulative_; }

    /// Selection mass of the best i ranks, i in 0..m.
    double top_mass(std::size_t i) const {
        if (i > m_) throw invalid_argument("top_mass: i out of range");
        return top_[i];
    }

    /// I(s): the rank i with F_m(1)+...+F_m(i-1) <= s < F_m(1)+...+F_m(i).
    std::size_t index_from_uniform(double s) const {
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
        if (it == cumulative_.end()) --it;
        return static_cast<std::size_t>(it - cumulative_.begin()) + 1;
    }

  private:
    SelectionScheme scheme_;
    std::size_t m_ = 0;
    std::vector<double> mass_;
    std::vector<double> cumulative_;
    std::vector<double> top_;
};

/// I(s) for a scheme at population size m.
inline std::size_t index_from_uniform(const SelectionScheme& s, std::size_t m, double u) {
    return SelectionTable(s, m).index_from_uniform(u);
}

/// A tie-consistent ranking of one population.
///
/// order[r-1] is the member (0-based) holding rank r, so fitness is
/// non-decreasing along `order`; rank_of[i] is the rank (1-based) of member i.
struct RankAssignment {
    std::vector<std::size_t> order;
    std::vector<std::size_t> rank_of;

    std::size_t member_with_rank(std::size_t rank) const { return order[rank - 1]; }
    std::size_t rank(std::size_t member) const { return rank_of[member]; }
};

/// Draws a ranking uniformly among the permutations that sort `fitness`
/// non-decreasingly: uniform shuffle, then stable sort by fitness.
/// Ties are exact equality of fitness values.
inline void rank_population(std::span<const double> fitness, SplitMix& rng, RankAssignment& out) {
    const std::size_t m = fitness.size();
    out.order.resize(m);
    std::iota(out.order.begin(), out.order.end(), std::size_t{0});
    for (std::size_t i = m; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(out.order[i - 1], out.order[j]);
    }
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
    out.rank_of.resize(m);
    for (std::size_t r = 0; r < m; ++r) out.rank_of[out.order[r]] = r + 1;
}

/// Fresh ranking drawn from a caller-owned stream.
inline RankAssignment rank_population(std::span<const double> fitness, Stream& rng) {
    SplitMix tie(rng());
    RankAssignment r;
    rank_population(fitness, tie, r);
    return r;
}

inline RankAssignment rank_population(const Population& x, const FitnessLandscape& f, Stream& rng) {
    const auto fit = fitness_values(x, f);
    return rank_population(fit, rng);
}

/// Limit repartition F(s) of linear ranking or tournament selection.
inline double limit_repartition(const SelectionScheme& s, double x) {
    switch (s.kind) {
    case SchemeKind::linear_ranking:
        return s.eta_minus * x + 0.5 * (s.eta_plus - s.eta_minus) * x * x;
    case SchemeKind::tournament:
        return std::pow(x, static_cast<double>(s.t));
    case SchemeKind::custom:
        break;
    }
    throw unsupported_scheme("custom selection tables have no limit repartition");
}

/// Selection drift sigma, the left derivative of F at 1.
inline double drift(const SelectionScheme& s) {
    switch (s.kind) {
    case SchemeKind::linear_ranking: return s.eta_plus;
    case SchemeKind::tournament: return static_cast<double>(s.t);
    case SchemeKind::custom: break;
    }
    throw unsupported_scheme("custom selection tables have no selection drift");
}

/// Largest delta in (0,1] such that
///   |F_m(m-i+1)+...+F_m(m) - sigma i/m| <= epsilon sigma i/m   for all i <= floor(delta m).
/// Returns nullopt when the inequality already fails at i = 1.
inline std::optional<double> validate_drift_hypothesis(const SelectionScheme& s, std::size_t m,
                                                       double epsilon) {
    if (!(epsilon > 0.0)) throw invalid_argument("validate_drift_hypothesis: epsilon must be > 0");
    const SelectionTable table(s, m);
    const double sigma = drift(s);
    const double md = static_cast<double>(m);
    for (std::size_t i = 1; i <= m; ++i) {
        const double target = sigma * static_cast<double>(i) / md;
        const double err = std::abs(table.top_mass(i) - target);
        if (err > epsilon * target * (1.0 + 1e-12) + 1e-15) {
            if (i == 1) return std::nullopt;
            return static_cast<double>(i - 1) / md;
        }
    }
    return 1.0;
}

} // namespace qsga
