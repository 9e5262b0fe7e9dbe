#pragma once

/// @file engine.hpp
/// The coupled simple genetic algorithm.
///
/// One generation consumes one RandomBlock: m uniforms S for selection, m/2
/// crossover flags V, m/2 cut positions W, an m x l mutation mask U, and a key
/// seeding the tie-breaking permutation. The step map is a deterministic
/// function of (population, block), so any number of trajectories fed the same
/// blocks are coupled.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qsga/core.hpp"
#include "qsga/errors.hpp"
#include "qsga/random.hpp"
#include "qsga/selection.hpp"
#include "qsga/variation.hpp"

namespace qsga {

struct GAConfig {
    std::size_t length = 1;
    std::size_t size = 2;
    SelectionScheme scheme = SelectionScheme::tournament(2);
    double p_c = 0.0;
    double p_m = 0.0;
    FitnessLandscape landscape = FitnessLandscape::sharp_peak(1);
    std::uint64_t seed = 0;
    std::size_t horizon = 1;

    void validate() const {
        if (length == 0) throw invalid_argument("l must be >= 1");
        if (size < 2 || size % 2 != 0) throw invalid_argument("m must be even and >= 2");
        if (!(p_c >= 0.0 && p_c <= 1.0)) throw invalid_argument("p_C must lie in [0,1]");
        if (!(p_m >= 0.0 && p_m <= 1.0)) throw invalid_argument("p_M must lie in [0,1]");
        if (landscape.length() != length) throw invalid_argument("landscape length differs from l");
        scheme.validate(size);
    }

    /// (1 - p_M)^l, computed as exp(l log(1 - p_M)).
    double survive_prob() const {
        if (p_m >= 1.0) return 0.0;
        return std::exp(static_cast<double>(length) * std::log1p(-p_m));
    }

    /// pi = sigma (1 - p_C)(1 - p_M)^l; absent for custom selection tables.
    std::optional<double> pi() const {
        if (scheme.kind == SchemeKind::custom) return std::nullopt;
        return drift(scheme) * (1.0 - p_c) * survive_prob();
    }
};

/// One generation's random input.
struct RandomBlock {
    std::size_t size = 0;
    std::size_t length = 0;
    std::size_t stride = 0;
    std::vector<double> s;            ///< m selection uniforms on [0,1)
    std::vector<std::uint8_t> v;      ///< m/2 crossover flags
    std::vector<std::uint32_t> w;     ///< m/2 cut positions in 1..l-1 (0 when l = 1)
    std::vector<Word> u;              ///< m packed mutation masks
    std::uint64_t tie_key = 0;        ///< seeds the tie-breaking shuffle

    void resize(std::size_t m, std::size_t l) {
        size = m;
        length = l;
        stride = words_for(l);
        s.assign(m, 0.0);
        v.assign(m / 2, 0);
        w.assign(m / 2, 0);
        u.assign(m * stride, 0);
    }

    std::span<const Word> u_row(std::size_t i) const { return {u.data() + i * stride, stride}; }
    std::span<Word> u_row(std::size_t i) { return {u.data() + i * stride, stride}; }
    ChromosomeView mask(std::size_t i) const { return {u_row(i), length}; }
    bool u_flag(std::size_t i, std::size_t j) const { return (u[i * stride + j / 64] >> (j % 64)) & 1U; }
    bool mask_is_zero(std::size_t i) const {
        const auto r = u_row(i);
        return std::all_of(r.begin(), r.end(), [](Word x) { return x == 0; });
    }
    std::size_t mask_ones(std::size_t i) const { return mask(i).ones(); }
};

/// Parents chosen during one step: parent[j] is the member of X_{n-1} selected by S^{j}.
struct StepRecord {
    std::vector<std::size_t> parent;
};

/// Precomputed per-configuration state for drawing blocks and stepping.
class Engine {
  public:
    explicit Engine(GAConfig config) : config_(std::move(config)) {
        config_.validate();
        table_ = SelectionTable(config_.scheme, config_.size);
        log1m_pm_ = config_.p_m < 1.0 ? std::log1p(-config_.p_m) : 0.0;
    }

    const GAConfig& config() const { return config_; }
    const SelectionTable& table() const { return table_; }
    std::size_t size() const { return config_.size; }
    std::size_t length() const { return config_.length; }

    /// Fills `b` in the fixed order S, V, W, U (member-major), tie key.
    ///
    /// Mutation flips are placed by geometric gaps between successive flips,
    /// which gives the same i.i.d. Bernoulli(p_M) law as one draw per bit.
    void draw_block(Stream& rng, RandomBlock& b) const {
        const std::size_t m = config_.size, l = config_.length;
        if (b.size != m || b.length != l) b.resize(m, l);
        for (auto& x : b.s) x = rng.uniform();
        for (auto& x : b.v) x = rng.bernoulli(config_.p_c) ? 1 : 0;
        if (l >= 2)
            for (auto& x : b.w) x = static_cast<std::uint32_t>(rng.uniform_int(1, l - 1));
        std::fill(b.u.begin(), b.u.end(), Word{0});
        if (config_.p_m >= 1.0) {
            for (std::size_t i = 0; i < m; ++i) {
                auto row = b.u_row(i);
                std::fill(row.begin(), row.end(), ~Word{0});
                row.back() &= tail_mask(l);
            }
        } else if (config_.p_m > 0.0) {
            for (std::size_t i = 0; i < m; ++i) {
                auto row = b.u_row(i);
                std::uint64_t pos = geometric_gap(rng, log1m_pm_);
                while (pos < l) {
                    row[pos / 64] |= Word{1} << (pos % 64);
                    const std::uint64_t gap = geometric_gap(rng, log1m_pm_);
                    if (gap >= l) break;
                    pos += gap + 1;
                }
            }
        }
        b.tie_key = rng();
    }

    RandomBlock draw_block(Stream& rng) const {
        RandomBlock b;
        draw_block(rng, b);
        return b;
    }

    void check_block(const RandomBlock& b) const {
        const std::size_t m = config_.size, l = config_.length;
        if (b.size != m || b.length != l || b.s.size() != m || b.v.size() != m / 2 ||
            b.w.size() != m / 2 || b.u.size() != m * words_for(l))
            throw invalid_argument("random block dimensions do not match (m, l)");
    }

    /// X_{n} = Phi_n(X_{n-1}). `fitness` must hold f(x(i)) for every member.
    /// One tie-consistent ranking, seeded by the block, serves all m draws.
    void step(const Population& x, std::span<const double> fitness, const RandomBlock& b,
              Population& out, RankAssignment& ranks, StepRecord* record = nullptr) const {
        check_block(b);
        const std::size_t m = config_.size, l = config_.length;
        if (x.size() != m || x.length() != l) throw invalid_argument("population shape does not match config");
        if (out.size() != m || out.length() != l) out = Population(m, l);

        SplitMix tie(b.tie_key);
        rank_population(fitness, tie, ranks);

        std::size_t parents_local[2];
        if (record) record->parent.resize(m);
        for (std::size_t pair = 0; pair < m / 2; ++pair) {
            for (std::size_t k = 0; k < 2; ++k) {
                const std::size_t j = 2 * pair + k;
                parents_local[k] = ranks.member_with_rank(table_.index_from_uniform(b.s[j]));
                if (record) record->parent[j] = parents_local[k];
            }
            const auto a = x[parents_local[0]].words;
            const auto c = x[parents_local[1]].words;
            auto first = out.row(2 * pair);
            auto second = out.row(2 * pair + 1);
            if (b.v[pair] && l >= 2) {
                detail::switch_words(b.w[pair], a, c, first);
                detail::switch_words(b.w[pair], c, a, second);
            } else {
                std::copy(a.begin(), a.end(), first.begin());
                std::copy(c.begin(), c.end(), second.begin());
            }
            const auto ua = b.u_row(2 * pair);
            const auto ub = b.u_row(2 * pair + 1);
            for (std::size_t w = 0; w < first.size(); ++w) {
                first[w] ^= ua[w];
                second[w] ^= ub[w];
            }
        }
    }

    Population step(const Population& x, const RandomBlock& b, StepRecord* record = nullptr) const {
        const auto fit = fitness_values(x, config_.landscape);
        Population out(config_.size, config_.length);
        RankAssignment ranks;
        step(x, fit, b, out, ranks, record);
        return out;
    }

  private:
    GAConfig config_;
    SelectionTable table_;
    double log1m_pm_ = 0.0;
};

inline RandomBlock draw_block(const GAConfig& config, Stream& rng) { return Engine(config).draw_block(rng); }

inline Population step(const Population& x, const RandomBlock& block, const GAConfig& config) {
    return Engine(config).step(x, block);
}

// ---------------------------------------------------------------------------
// Genealogy of the initial Master sequence.

struct GenealogyState {
    std::vector<std::uint8_t> progeny; ///< M(i): Master appears in the genealogy of member i
    std::size_t total = 0;             ///< T = sum of M(i)
    std::size_t master_copies = 0;     ///< N* = exact copies of 1...1
    /// D = max number of ones among non-progeny members; empty when every member is progeny.
    std::optional<std::size_t> max_ones_non_progeny;

    static GenealogyState from_population(const Population& x0) {
        GenealogyState g;
        g.progeny.resize(x0.size());
        for (std::size_t i = 0; i < x0.size(); ++i) g.progeny[i] = x0[i].all_ones() ? 1 : 0;
        g.recount(x0);
        return g;
    }

    void recount(const Population& x) {
        total = 0;
        master_copies = 0;
        max_ones_non_progeny.reset();
        for (std::size_t i = 0; i < x.size(); ++i) {
            total += progeny[i];
            if (x[i].all_ones()) ++master_copies;
            if (!progeny[i]) {
                const std::size_t ones = x[i].ones();
                if (!max_ones_non_progeny || ones > *max_ones_non_progeny) max_ones_non_progeny = ones;
            }
        }
    }
};

/// Advances the genealogy through one step: both children of a pair inherit the
/// OR of their two parents' flags.
inline GenealogyState genealogy_step(const GenealogyState& state, const StepRecord& selections,
                                     const Population& next) {
    const std::size_t m = next.size();
    if (selections.parent.size() != m || state.progeny.size() != m)
        throw invalid_argument("genealogy_step: shape mismatch");
    GenealogyState g;
    g.progeny.resize(m);
    for (std::size_t pair = 0; pair < m / 2; ++pair) {
        const std::uint8_t flag =
            state.progeny[selections.parent[2 * pair]] | state.progeny[selections.parent[2 * pair + 1]];
        g.progeny[2 * pair] = flag;
        g.progeny[2 * pair + 1] = flag;
    }
    g.recount(next);
    return g;
}

// ---------------------------------------------------------------------------
// Catastrophes.

/// Index floor(rho m), clamped to 1..m.
inline std::size_t level_index(double rho, std::size_t m) {
    const auto k = static_cast<std::size_t>(std::floor(rho * static_cast<double>(m)));
    return std::clamp<std::size_t>(k, 1, m);
}

/// Incremental catastrophe detector: flags generation n when the best fitness
/// is below max_{s <= n} Lambda(X_s, floor(rho m)).
class CatastropheTracker {
  public:
    explicit CatastropheTracker(double rho) : rho_(rho) {
        if (!(rho > 0.0 && rho <= 1.0)) throw invalid_argument("catastrophe fraction must lie in (0,1]");
    }

    bool observe(std::span<const double> fitness) {
        const double level = level_fitness(fitness, level_index(rho_, fitness.size()));
        running_ = seen_ ? std::max(running_, level) : level;
        seen_ = true;
        const double best = *std::max_element(fitness.begin(), fitness.end());
        return best < running_;
    }

    double running_level() const { return running_; }

  private:
    double rho_;
    double running_ = 0.0;
    bool seen_ = false;
};

/// Catastrophe flags for a sequence of per-generation fitness vectors.
inline std::vector<bool> observe_catastrophe(const std::vector<std::vector<double>>& fitness_trace,
                                             double rho) {
    CatastropheTracker tracker(rho);
    std::vector<bool> flags;
    flags.reserve(fitness_trace.size());
    for (const auto& f : fitness_trace) flags.push_back(tracker.observe(f));
    return flags;
}

// ---------------------------------------------------------------------------
// Runs and traces.

struct TraceOptions {
    std::vector<double> rhos;       ///< record Lambda(x, floor(rho m))
    std::vector<double> lambdas;    ///< record N(x, lambda)
    bool genealogy = false;         ///< record T, N*, D
    std::optional<double> catastrophe_rho;
    bool dump_populations = false;
};

struct TraceRecord {
    std::size_t generation = 0;
    double best = 0.0;
    std::vector<double> levels;
    std::vector<std::size_t> counts;
    std::optional<std::size_t> total_progeny;
    std::optional<std::size_t> master_copies;
    std::optional<std::size_t> max_ones_non_progeny;
    bool catastrophe = false;
    std::optional<Population> population;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Observer = std::function<void(std::size_t generation, const Population&, std::span<const double>)>;

namespace detail {

class Recorder {
  public:
    Recorder(const TraceOptions& options, const Population& x0) : options_(options) {
        if (options.catastrophe_rho) tracker_.emplace(*options.catastrophe_rho);
        if (options.genealogy) genealogy_ = GenealogyState::from_population(x0);
    }

    TraceRecord record(std::size_t n, const Population& x, std::span<const double> fitness) {
        TraceRecord r;
        r.generation = n;
        r.best = *std::max_element(fitness.begin(), fitness.end());
        for (double rho : options_.rhos) r.levels.push_back(level_fitness(fitness, level_index(rho, x.size())));
        for (double lambda : options_.lambdas) r.counts.push_back(count_at_least(fitness, lambda));
        if (genealogy_) {
            r.total_progeny = genealogy_->total;
            r.master_copies = genealogy_->master_copies;
            r.max_ones_non_progeny = genealogy_->max_ones_non_progeny;
        }
        if (tracker_) r.catastrophe = tracker_->observe(fitness);
        if (options_.dump_populations) r.population = x;
        return r;
    }

    void advance(const StepRecord& sel, const Population& next) {
        if (genealogy_) genealogy_ = genealogy_step(*genealogy_, sel, next);
    }

    bool wants_selections() const { return genealogy_.has_value(); }

  private:
    const TraceOptions& options_;
    std::optional<CatastropheTracker> tracker_;
    std::optional<GenealogyState> genealogy_;
};

} // namespace detail

/// Applies `config.horizon` steps from x0 with the stream derived from
/// config.seed, recording one TraceRecord per generation (including n = 0).
/// Observers see each population read-only.
inline std::vector<TraceRecord> run(const GAConfig& config, const Population& x0,
                                    const TraceOptions& options = {},
                                    std::span<const Observer> observers = {}) {
    const Engine engine(config);
    if (x0.size() != config.size || x0.length() != config.length)
        throw invalid_argument("run: initial population shape does not match config");
    Stream rng(derive_seed(config.seed, 0, "engine"));
    detail::Recorder recorder(options, x0);
    std::vector<TraceRecord> trace;
    trace.reserve(config.horizon + 1);

    Population cur = x0, next(config.size, config.length);
    std::vector<double> fit = fitness_values(cur, config.landscape);
    RandomBlock block;
    RankAssignment ranks;
    StepRecord sel;
    for (std::size_t n = 0;; ++n) {
        trace.push_back(recorder.record(n, cur, fit));
        for (const auto& obs : observers) obs(n, cur, fit);
        if (n == config.horizon) break;
        engine.draw_block(rng, block);
        engine.step(cur, fit, block, next, ranks, recorder.wants_selections() ? &sel : nullptr);
        std::swap(cur, next);
        recorder.advance(sel, cur);
        for (std::size_t i = 0; i < cur.size(); ++i) fit[i] = config.landscape(cur[i]);
    }
    return trace;
}

/// Runs one trajectory per start, all driven by the same block sequence.
inline std::vector<std::vector<TraceRecord>> coupled_run(const GAConfig& config,
                                                         const std::vector<Population>& starts,
                                                         const TraceOptions& options = {}) {
    const Engine engine(config);
    for (const auto& x : starts)
        if (x.size() != config.size || x.length() != config.length)
            throw invalid_argument("coupled_run: start shape does not match config");
    Stream rng(derive_seed(config.seed, 0, "engine"));
    const std::size_t k = starts.size();
    std::vector<detail::Recorder> recorders;
    recorders.reserve(k);
    for (const auto& x : starts) recorders.emplace_back(options, x);
    std::vector<Population> cur = starts, next = starts;
    std::vector<std::vector<double>> fit(k);
    for (std::size_t t = 0; t < k; ++t) fit[t] = fitness_values(cur[t], config.landscape);
    std::vector<std::vector<TraceRecord>> traces(k);
    RandomBlock block;
    RankAssignment ranks;
    StepRecord sel;
    for (std::size_t n = 0;; ++n) {
        for (std::size_t t = 0; t < k; ++t) traces[t].push_back(recorders[t].record(n, cur[t], fit[t]));
        if (n == config.horizon) break;
        engine.draw_block(rng, block);
        for (std::size_t t = 0; t < k; ++t) {
            engine.step(cur[t], fit[t], block, next[t], ranks, &sel);
            std::swap(cur[t], next[t]);
            recorders[t].advance(sel, cur[t]);
            for (std::size_t i = 0; i < cur[t].size(); ++i) fit[t][i] = config.landscape(cur[t][i]);
        }
    }
    return traces;
}

} // namespace qsga
