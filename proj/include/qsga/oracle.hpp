#pragma once

/// @file oracle.hpp
/// Exact transition matrices for tiny instances, stationary distributions and
/// the first-passage bound on the invariant measure.
///
/// A population x with chromosome codes c_1..c_m (K = 2^l values each) is the
/// state  c_1 + c_2 K + ... + c_m K^(m-1).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <vector>

#include "qsga/core.hpp"
#include "qsga/engine.hpp"
#include "qsga/errors.hpp"
#include "qsga/selection.hpp"
#include "qsga/variation.hpp"

namespace qsga {

/// Largest state space the oracle accepts.
inline constexpr std::size_t kOracleStateCap = 4096;

/// How the selection matrix treats the random tie-breaking permutation.
enum class TieAveraging {
    /// One permutation per generation: average the m-fold product over permutations.
    per_generation,
    /// Average the single-draw marginal sel(x, u) first, then take the product.
    per_draw,
};

/// Encoding of populations of a fixed shape as integer states.
class StateSpace {
  public:
    StateSpace(std::size_t size, std::size_t length) : m_(size), l_(length) {
        if (length == 0 || length > 12) throw capacity_error("oracle: chromosome length too large");
        k_ = std::size_t{1} << length;
        n_ = 1;
        for (std::size_t i = 0; i < size; ++i) {
            n_ *= k_;
            if (n_ > kOracleStateCap) throw capacity_error("oracle: more than 4096 populations");
        }
        pow_.resize(size + 1, 1);
        for (std::size_t i = 1; i <= size; ++i) pow_[i] = pow_[i - 1] * k_;
    }

    std::size_t size() const { return m_; }
    std::size_t length() const { return l_; }
    std::size_t codes() const { return k_; }
    std::size_t states() const { return n_; }
    std::size_t place(std::size_t member) const { return pow_[member]; }

    std::size_t digit(std::size_t state, std::size_t member) const { return (state / pow_[member]) % k_; }

    std::size_t encode(const Population& x) const {
        if (x.size() != m_ || x.length() != l_) throw invalid_argument("oracle: population shape mismatch");
        std::size_t s = 0;
        for (std::size_t i = 0; i < m_; ++i) s += static_cast<std::size_t>(x[i].code()) * pow_[i];
        return s;
    }

    Population decode(std::size_t state) const {
        Population x(m_, l_);
        for (std::size_t i = 0; i < m_; ++i) x.assign(i, Chromosome::from_code(digit(state, i), l_));
        return x;
    }

  private:
    std::size_t m_, l_, k_ = 0, n_ = 0;
    std::vector<std::size_t> pow_;
};

namespace detail {

/// Selection masses per chromosome code for every distinct tie-consistent
/// assignment of codes to ranks. All assignments are equally likely.
inline std::vector<std::vector<double>> arrangement_masses(const StateSpace& space, std::size_t state,
                                                           const FitnessLandscape& f, const SelectionTable& table,
                                                           std::size_t arrangement_cap) {
    const std::size_t m = space.size();
    std::vector<std::size_t> code(m);
    std::vector<double> fit(m);
    for (std::size_t i = 0; i < m; ++i) {
        code[i] = space.digit(state, i);
        fit[i] = f(Chromosome::from_code(code[i], space.length()));
    }
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return fit[a] != fit[b] ? fit[a] < fit[b] : code[a] < code[b];
    });
    // ranked[r] = code at rank r+1; groups are maximal runs of equal fitness.
    std::vector<std::size_t> ranked(m);
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    for (std::size_t r = 0; r < m; ++r) {
        ranked[r] = code[idx[r]];
        if (r == 0 || fit[idx[r]] != fit[idx[r - 1]]) groups.emplace_back(r, r + 1);
        else groups.back().second = r + 1;
    }

    std::vector<std::vector<double>> out;
    auto emit = [&]() {
        if (out.size() >= arrangement_cap) throw capacity_error("oracle: too many tie arrangements");
        std::vector<double> q(space.codes(), 0.0);
        for (std::size_t r = 0; r < m; ++r) q[ranked[r]] += table.mass(r + 1);
        out.push_back(std::move(q));
    };
    // Odometer over the distinct permutations of each group's multiset.
    for (auto& g : groups)
        std::sort(ranked.begin() + static_cast<std::ptrdiff_t>(g.first),
                  ranked.begin() + static_cast<std::ptrdiff_t>(g.second));
    while (true) {
        emit();
        std::size_t gi = 0;
        for (; gi < groups.size(); ++gi) {
            auto b = ranked.begin() + static_cast<std::ptrdiff_t>(groups[gi].first);
            auto e = ranked.begin() + static_cast<std::ptrdiff_t>(groups[gi].second);
            if (std::next_permutation(b, e)) break; // wraps to sorted order when exhausted
        }
        if (gi == groups.size()) break;
    }
    return out;
}

/// Adds weight * prod_j q(y_j) into row[y] for every y over the support of q.
inline void add_product_measure(const StateSpace& space, const std::vector<double>& q, double weight,
                                std::vector<double>& row) {
    std::vector<std::size_t> support;
    for (std::size_t c = 0; c < q.size(); ++c)
        if (q[c] > 0.0) support.push_back(c);
    const std::size_t m = space.size();
    std::vector<std::size_t> pos(m, 0);
    while (true) {
        double p = weight;
        std::size_t y = 0;
        for (std::size_t j = 0; j < m; ++j) {
            p *= q[support[pos[j]]];
            y += support[pos[j]] * space.place(j);
        }
        row[y] += p;
        std::size_t j = 0;
        for (; j < m; ++j) {
            if (++pos[j] < support.size()) break;
            pos[j] = 0;
        }
        if (j == m) break;
    }
}

inline std::size_t switch_code(std::size_t k, std::size_t u, std::size_t v) {
    const std::size_t low = (std::size_t{1} << k) - 1;
    return (u & low) | (v & ~low);
}

} // namespace detail

/// Exact one-step computations for a tiny GA configuration.
class ExactChain {
  public:
    explicit ExactChain(GAConfig config, TieAveraging averaging = TieAveraging::per_generation,
                        std::size_t arrangement_cap = 1'000'000)
        : config_(std::move(config)), space_(config_.size, config_.length), averaging_(averaging),
          arrangement_cap_(arrangement_cap) {
        config_.validate();
        table_ = SelectionTable(config_.scheme, config_.size);
        const std::size_t k = space_.codes();
        const MutationParams mp{config_.p_m, config_.length};
        mutation_.resize(k * k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                mutation_[a * k + b] = mutation_prob(mp, Chromosome::from_code(a, config_.length),
                                                     Chromosome::from_code(b, config_.length));
    }

    const StateSpace& space() const { return space_; }
    const GAConfig& config() const { return config_; }
    std::size_t states() const { return space_.states(); }

    /// Row x of P_S as a dense vector.
    std::vector<double> selection_row(std::size_t x) const {
        std::vector<double> row(states(), 0.0);
        const auto arrangements =
            detail::arrangement_masses(space_, x, config_.landscape, table_, arrangement_cap_);
        const double w = 1.0 / static_cast<double>(arrangements.size());
        if (averaging_ == TieAveraging::per_generation) {
            for (const auto& q : arrangements) detail::add_product_measure(space_, q, w, row);
        } else {
            std::vector<double> marginal(space_.codes(), 0.0);
            for (const auto& q : arrangements)
                for (std::size_t c = 0; c < q.size(); ++c) marginal[c] += w * q[c];
            detail::add_product_measure(space_, marginal, 1.0, row);
        }
        return row;
    }

    /// v <- v P_C, pair by pair.
    void apply_crossover(std::vector<double>& v) const {
        const std::size_t l = config_.length;
        if (l == 1) return;
        const double keep = 1.0 - config_.p_c;
        const double per_cut = config_.p_c / static_cast<double>(l - 1);
        std::vector<double> out(v.size());
        for (std::size_t pair = 0; pair < space_.size() / 2; ++pair) {
            std::fill(out.begin(), out.end(), 0.0);
            const std::size_t pa = space_.place(2 * pair), pb = space_.place(2 * pair + 1);
            for (std::size_t s = 0; s < v.size(); ++s) {
                if (v[s] == 0.0) continue;
                const std::size_t a = space_.digit(s, 2 * pair), b = space_.digit(s, 2 * pair + 1);
                const std::size_t base = s - a * pa - b * pb;
                out[s] += keep * v[s];
                for (std::size_t k = 1; k < l; ++k) {
                    const std::size_t a2 = detail::switch_code(k, a, b), b2 = detail::switch_code(k, b, a);
                    out[base + a2 * pa + b2 * pb] += per_cut * v[s];
                }
            }
            v.swap(out);
        }
    }

    /// v <- v P_M, member by member.
    void apply_mutation(std::vector<double>& v) const {
        const std::size_t k = space_.codes();
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < space_.size(); ++i) {
            std::fill(out.begin(), out.end(), 0.0);
            const std::size_t p = space_.place(i);
            for (std::size_t s = 0; s < v.size(); ++s) {
                if (v[s] == 0.0) continue;
                const std::size_t a = space_.digit(s, i);
                const std::size_t base = s - a * p;
                for (std::size_t b = 0; b < k; ++b) out[base + b * p] += v[s] * mutation_[a * k + b];
            }
            v.swap(out);
        }
    }

    /// Row x of P_SGA = P_S P_C P_M.
    std::vector<double> row(std::size_t x) const {
        auto r = selection_row(x);
        apply_crossover(r);
        apply_mutation(r);
        return r;
    }

    Eigen::MatrixXd selection_matrix() const {
        Eigen::MatrixXd p(states(), states());
        for (std::size_t x = 0; x < states(); ++x) {
            const auto r = selection_row(x);
            for (std::size_t y = 0; y < states(); ++y) p(x, y) = r[y];
        }
        return p;
    }

    Eigen::MatrixXd crossover_matrix() const { return unit_rows([this](std::vector<double>& v) { apply_crossover(v); }); }
    Eigen::MatrixXd mutation_matrix() const { return unit_rows([this](std::vector<double>& v) { apply_mutation(v); }); }

    /// P_SGA as a dense matrix.
    Eigen::MatrixXd transition_matrix() const {
        Eigen::MatrixXd p(states(), states());
        for (std::size_t x = 0; x < states(); ++x) {
            const auto r = row(x);
            for (std::size_t y = 0; y < states(); ++y) p(x, y) = r[y];
        }
        return p;
    }

  private:
    template <class Apply>
    Eigen::MatrixXd unit_rows(Apply apply) const {
        Eigen::MatrixXd p(states(), states());
        std::vector<double> v(states());
        for (std::size_t x = 0; x < states(); ++x) {
            std::fill(v.begin(), v.end(), 0.0);
            v[x] = 1.0;
            apply(v);
            for (std::size_t y = 0; y < states(); ++y) p(x, y) = v[y];
        }
        return p;
    }

    GAConfig config_;
    StateSpace space_;
    TieAveraging averaging_;
    std::size_t arrangement_cap_;
    SelectionTable table_;
    std::vector<double> mutation_;
};

/// P_SGA for a tiny configuration; capacity_error above 4096 populations.
inline Eigen::MatrixXd exact_transition_matrix(const GAConfig& config,
                                               TieAveraging averaging = TieAveraging::per_generation) {
    return ExactChain(config, averaging).transition_matrix();
}

/// Largest |row sum - 1|.
inline double max_row_sum_error(const Eigen::MatrixXd& p) {
    return (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Chain structure.

/// True when every state reaches every other state along positive entries.
inline bool is_irreducible(const Eigen::MatrixXd& p) {
    const auto n = static_cast<std::size_t>(p.rows());
    auto reach_all = [&](bool forward) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v) {
                const double w = forward ? p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v))
                                         : p(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return n > 0 && reach_all(true) && reach_all(false);
}

/// Period of an irreducible chain: gcd over edges (u,v) of level(u) + 1 - level(v).
inline std::size_t period(const Eigen::MatrixXd& p) {
    const auto n = static_cast<std::size_t>(p.rows());
    std::vector<long> level(n, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    long g = 0;
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v) {
            if (!(p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0)) continue;
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            } else {
                g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
            }
        }
    }
    return static_cast<std::size_t>(g);
}

/// Stationary distribution by power iteration on the lazy chain (P + I)/2,
/// which has the same invariant measure and is aperiodic.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p, double tol = 1e-14,
                                               std::size_t max_iter = 10'000'000) {
    if (!is_irreducible(p)) throw domain_error("stationary_distribution: chain is reducible");
    const auto n = p.rows();
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd lazy = 0.5 * (p + Eigen::MatrixXd::Identity(n, n));
    for (std::size_t it = 0; it < max_iter; ++it) {
        Eigen::RowVectorXd next = mu * lazy;
        next /= next.sum();
        const double diff = (next - mu).lpNorm<1>();
        mu = next;
        if (diff < tol) break;
    }
    return mu.transpose();
}

/// Stationary distribution by solving mu (P - I) = 0, sum mu = 1 directly.
inline Eigen::VectorXd stationary_direct(const Eigen::MatrixXd& p) {
    if (!is_irreducible(p)) throw domain_error("stationary_direct: chain is reducible");
    const auto n = p.rows();
    Eigen::MatrixXd a = (p - Eigen::MatrixXd::Identity(n, n)).transpose();
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    return a.fullPivLu().solve(b);
}

struct InvariantBound {
    double lhs = 0.0;            ///< mu(G)
    double rhs = 0.0;            ///< sup_{x in V} P_x(tau_G < tau_V) * sup_{y in G} E_y(tau_V)
    double escape_prob = 0.0;    ///< the first factor
    double return_time = 0.0;    ///< the second factor
    bool holds() const { return lhs <= rhs * (1.0 + 1e-9) + 1e-12; }
};

/// Checks mu(G) <= sup_{x in V} P_x(tau_G < tau_V) sup_{y in G} E_y(tau_V) with
/// tau_V = inf{n >= 1 : X_n in V} and tau_G = inf{n >= 0 : X_n in G}.
inline InvariantBound check_invariant_measure_bound(const Eigen::MatrixXd& p, const std::vector<std::size_t>& v_set,
                                                    const std::vector<std::size_t>& g_set) {
    const auto n = static_cast<std::size_t>(p.rows());
    if (v_set.empty() || g_set.empty()) throw invalid_argument("invariant bound: V and G must be non-empty");
    if (!is_irreducible(p)) throw domain_error("invariant bound: chain is reducible");
    if (period(p) != 1) throw domain_error("invariant bound: chain is periodic");
    std::vector<char> in_v(n, 0), in_g(n, 0);
    for (auto s : v_set) {
        if (s >= n) throw invalid_argument("invariant bound: state out of range");
        in_v[s] = 1;
    }
    for (auto s : g_set) {
        if (s >= n) throw invalid_argument("invariant bound: state out of range");
        in_g[s] = 1;
    }

    auto solve_on = [&](const std::vector<char>& unknown, const Eigen::VectorXd& rhs_full, bool hit_one_on_g) {
        // Solves h = b + P h on the unknown states, with h fixed outside them.
        std::vector<std::size_t> idx;
        for (std::size_t s = 0; s < n; ++s)
            if (unknown[s]) idx.push_back(s);
        Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        if (hit_one_on_g)
            for (std::size_t s = 0; s < n; ++s)
                if (in_g[s] && !in_v[s]) h(static_cast<Eigen::Index>(s)) = 1.0;
        if (idx.empty()) return h;
        const auto k = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
        Eigen::VectorXd b(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            const auto sr = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
            b(r) = rhs_full(sr);
            for (std::size_t s = 0; s < n; ++s) {
                const double w = p(sr, static_cast<Eigen::Index>(s));
                if (w == 0.0) continue;
                if (unknown[s]) {
                    const auto c = static_cast<Eigen::Index>(std::lower_bound(idx.begin(), idx.end(), s) - idx.begin());
                    a(r, c) -= w;
                } else {
                    b(r) += w * h(static_cast<Eigen::Index>(s));
                }
            }
        }
        const Eigen::VectorXd sol = a.partialPivLu().solve(b);
        for (Eigen::Index r = 0; r < k; ++r) h(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)])) = sol(r);
        return h;
    };

    // k(z): expected steps to reach V from z counting n >= 0 (zero on V).
    std::vector<char> off_v(n);
    for (std::size_t s = 0; s < n; ++s) off_v[s] = !in_v[s];
    const Eigen::VectorXd kv = solve_on(off_v, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)), false);
    // g(z): probability to enter G \ V strictly before V, from z at the current time.
    std::vector<char> free_states(n);
    for (std::size_t s = 0; s < n; ++s) free_states[s] = !in_v[s] && !in_g[s];
    const Eigen::VectorXd gz = solve_on(free_states, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), true);

    InvariantBound out;
    for (std::size_t x : v_set) {
        double e = 1.0;
        if (!in_g[x]) e = p.row(static_cast<Eigen::Index>(x)).dot(gz);
        out.escape_prob = std::max(out.escape_prob, e);
    }
    for (std::size_t y : g_set)
        out.return_time = std::max(out.return_time, 1.0 + p.row(static_cast<Eigen::Index>(y)).dot(kv));
    const Eigen::VectorXd mu = stationary_distribution(p);
    for (std::size_t y : g_set) out.lhs += mu(static_cast<Eigen::Index>(y));
    out.rhs = out.escape_prob * out.return_time;
    return out;
}

/// States whose population contains a member of maximal fitness over {0,1}^l.
inline std::vector<std::size_t> states_with_optimum(const StateSpace& space, const FitnessLandscape& f) {
    const std::size_t k = space.codes();
    std::vector<double> fit(k);
    for (std::size_t c = 0; c < k; ++c) fit[c] = f(Chromosome::from_code(c, space.length()));
    const double best = *std::max_element(fit.begin(), fit.end());
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < space.states(); ++s)
        for (std::size_t i = 0; i < space.size(); ++i)
            if (fit[space.digit(s, i)] == best) {
                out.push_back(s);
                break;
            }
    return out;
}

} // namespace qsga
