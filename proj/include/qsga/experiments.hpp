#pragma once

/// @file experiments.hpp
/// Scenario runner: seeded trials farmed to a worker pool, per-trial CSV rows
/// and a JSON summary computed from those rows.
///
/// Scenarios: disordered, quasispecies, catastrophe, hitting-time,
/// stationary-tiny, auxchain-equilibrium, auxchain-persistence. A scenario may
/// sweep one engine key ("sweep": {"key": "pi", "values": [...]}); each sweep
/// value is a parameter point, and trials are numbered across points.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "qsga/auxchain.hpp"
#include "qsga/config.hpp"
#include "qsga/core.hpp"
#include "qsga/engine.hpp"
#include "qsga/errors.hpp"
#include "qsga/oracle.hpp"
#include "qsga/random.hpp"
#include "qsga/theory.hpp"

namespace qsga {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Statistics helpers.

namespace stats {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return kMissing;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
    if (v.empty()) return kMissing;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Wilson score interval for a binomial proportion at normal quantile z.
inline std::pair<double, double> wilson(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
    if (n == 0) return {kMissing, kMissing};
    const double nd = static_cast<double>(n), p = static_cast<double>(successes) / nd;
    const double denom = 1.0 + z * z / nd;
    const double centre = (p + z * z / (2.0 * nd)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nd + z * z / (4.0 * nd * nd)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct Regression {
    double slope = kMissing;
    double intercept = kMissing;
    double stderr_slope = kMissing;
    double t_stat = kMissing;
    std::size_t n = 0;
};

/// Ordinary least squares y = a + b x with the usual standard error of b.
inline Regression ols(const std::vector<double>& x, const std::vector<double>& y) {
    Regression r;
    r.n = x.size();
    if (x.size() != y.size() || x.size() < 3) return r;
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - r.intercept - r.slope * x[i];
        rss += e * e;
    }
    r.stderr_slope = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
    r.t_stat = r.stderr_slope > 0.0 ? r.slope / r.stderr_slope : (r.slope > 0.0 ? kInf : -kInf);
    return r;
}

/// One-sided 95% normal quantile, used for the slope tests (thousands of rows).
inline constexpr double kOneSided95 = 1.6448536269514722;

} // namespace stats

// ---------------------------------------------------------------------------
// Results.

/// A numeric CSV table: one row per trial, NaN written as an empty cell.
struct TrialTable {
    std::vector<std::string> columns; ///< observable columns after scenario,trial,seed,point
    struct Row {
        std::size_t trial = 0;
        std::uint64_t seed = 0;
        std::size_t point = 0;
        std::vector<double> values;
    };
    std::vector<Row> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw invalid_argument("no such column: " + name);
        return static_cast<std::size_t>(it - columns.begin());
    }

    /// Values of one column for the rows of one point.
    std::vector<double> values(const std::string& name, std::size_t point) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.point == point) out.push_back(r.values[c]);
        return out;
    }
};

struct ScenarioResult {
    std::string scenario;
    TrialTable table;
    json summary;
};

/// Formats a value so that parsing it back gives the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const std::string& scenario, const TrialTable& t) {
    std::string out = "scenario,trial,seed,point";
    for (const auto& c : t.columns) out += "," + c;
    out += "\n";
    for (const auto& r : t.rows) {
        out += scenario + "," + std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + std::to_string(r.point);
        for (double v : r.values) out += "," + format_number(v);
        out += "\n";
    }
    return out;
}

/// Parses a CSV produced by to_csv back into a table.
inline TrialTable parse_csv(const std::string& text, std::string* scenario = nullptr) {
    TrialTable t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cells.push_back(cur);
        return cells;
    };
    if (!std::getline(in, line)) throw invalid_argument("empty CSV");
    auto head = split(line);
    if (head.size() < 4) throw invalid_argument("CSV header too short");
    t.columns.assign(head.begin() + 4, head.end());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != head.size()) throw invalid_argument("CSV row has the wrong number of cells");
        if (scenario) *scenario = cells[0];
        TrialTable::Row r;
        r.trial = std::stoull(cells[1]);
        r.seed = std::stoull(cells[2]);
        r.point = std::stoull(cells[3]);
        for (std::size_t c = 4; c < cells.size(); ++c)
            r.values.push_back(cells[c].empty() ? kMissing : std::strtod(cells[c].c_str(), nullptr));
        t.rows.push_back(std::move(r));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Worker pool.

/// Calls fn(i) for i in [0, n) on `workers` threads. Each index is processed
/// exactly once; callers write results into slot i, so the outcome does not
/// depend on scheduling.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Scenario plumbing.

struct RunOptions {
    std::optional<std::size_t> trials;
    std::optional<std::size_t> horizon;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

/// One parameter point of a scenario.
struct ScenarioPoint {
    json label;   ///< sweep value, or null
    json engine;  ///< resolved engine section
    std::optional<GAConfig> ga;
    std::optional<AuxParams> aux;
    double pi = kMissing;
    double sigma = kMissing;
    double rho_star = kMissing;
};

enum class StartKind { master_over_zeros, all_master, zeros, random };

inline StartKind parse_start(const std::string& s) {
    if (s == "master-over-zeros") return StartKind::master_over_zeros;
    if (s == "all-master") return StartKind::all_master;
    if (s == "zeros") return StartKind::zeros;
    if (s == "random") return StartKind::random;
    throw config_error("unknown start kind: " + s);
}

inline Population make_start(StartKind kind, std::size_t m, std::size_t l, std::uint64_t trial_seed) {
    switch (kind) {
    case StartKind::master_over_zeros: return Population::master_over_zeros(m, l);
    case StartKind::all_master: {
        Population p(m, l);
        for (std::size_t i = 0; i < m; ++i) p.assign(i, Chromosome::ones(l));
        return p;
    }
    case StartKind::zeros: return Population(m, l);
    case StartKind::random: {
        Stream rng(derive_seed(trial_seed, 0, "start"));
        Population p(m, l);
        for (std::size_t i = 0; i < m; ++i) {
            auto row = p.row(i);
            for (auto& w : row) w = rng();
            row.back() &= tail_mask(l);
        }
        return p;
    }
    }
    return Population(m, l);
}

namespace detail {

inline std::vector<ScenarioPoint> expand_points(const RunConfig& rc, bool aux) {
    std::vector<json> engines;
    std::vector<json> labels;
    const json& sc = rc.scenario;
    if (sc.contains("sweep")) {
        const auto key = require<std::string>(sc["sweep"], "key", "scenario.sweep");
        const auto values = require<std::vector<double>>(sc["sweep"], "values", "scenario.sweep");
        if (values.empty()) throw config_error("sweep needs at least one value");
        for (double v : values) {
            json e = rc.engine;
            if (key == "m" || key == "ell") e[key] = static_cast<std::size_t>(v);
            else e[key] = v;
            if (key == "pi") e.erase("p_M"), e.erase("survive");
            if (key == "p_M") e.erase("pi"), e.erase("survive");
            engines.push_back(e);
            labels.push_back(json{{key, v}});
        }
    } else {
        engines.push_back(rc.engine);
        labels.push_back(nullptr);
    }
    std::vector<ScenarioPoint> points;
    for (std::size_t k = 0; k < engines.size(); ++k) {
        json e = engines[k];
        if (get_or<bool>(sc, "ell_equals_m", false)) {
            if (labels[k].is_object() && labels[k].contains("ell")) e["m"] = e["ell"];
            else e["ell"] = e["m"];
        }
        if (sc.contains("m_factor") && e.contains("ell")) {
            const double l = e["ell"].get<double>();
            auto m = static_cast<std::size_t>(std::ceil(sc["m_factor"].get<double>() * std::log(l)));
            if (m % 2 != 0) ++m;
            e["m"] = std::max<std::size_t>(2, m);
        }
        ScenarioPoint p;
        p.label = labels[k];
        p.engine = e;
        if (aux) {
            p.aux = build_aux_params(e, rc.scheme);
            if (auto pi = p.aux->pi()) {
                p.pi = *pi;
                p.sigma = drift(p.aux->scheme());
                p.rho_star = rho_star(p.aux->scheme(), std::min(p.pi, p.sigma));
            }
        } else {
            p.ga = build_ga_config(e, rc.scheme, rc.landscape);
            if (auto pi = p.ga->pi()) {
                p.pi = *pi;
                p.sigma = drift(p.ga->scheme);
                p.rho_star = rho_star(p.ga->scheme, std::min(p.pi, p.sigma));
            }
        }
        points.push_back(std::move(p));
    }
    return points;
}

using TrialFn = std::function<std::vector<double>(const ScenarioPoint&, std::uint64_t seed)>;

inline TrialTable run_trials(const std::string& name, const std::vector<ScenarioPoint>& points, std::size_t trials,
                             std::uint64_t master, std::size_t workers, std::vector<std::string> columns,
                             const TrialFn& fn) {
    TrialTable t;
    t.columns = std::move(columns);
    t.rows.resize(points.size() * trials);
    parallel_for(t.rows.size(), workers, [&](std::size_t i) {
        auto& r = t.rows[i];
        r.trial = i;
        r.point = i / trials;
        r.seed = derive_seed(master, i, name);
        r.values = fn(points[r.point], r.seed);
        if (r.values.size() != t.columns.size()) throw std::logic_error("trial returned the wrong number of values");
    });
    return t;
}

inline json point_header(const ScenarioPoint& p) {
    json j;
    j["label"] = p.label;
    j["engine"] = p.engine;
    j["pi"] = std::isnan(p.pi) ? json(nullptr) : json(p.pi);
    j["sigma"] = std::isnan(p.sigma) ? json(nullptr) : json(p.sigma);
    j["rho_star"] = std::isnan(p.rho_star) ? json(nullptr) : json(p.rho_star);
    if (!std::isnan(p.pi)) j["regime"] = regime_name(regime_of(p.pi));
    if (p.ga) j["p_M"] = p.ga->p_m;
    if (p.aux) j["survive"] = p.aux->survive_prob();
    return j;
}

inline json num(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

inline std::size_t count_true(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0 && !std::isnan(x); }));
}

inline std::vector<double> finite_only(const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v)
        if (!std::isnan(x)) out.push_back(x);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Summaries. Each is a pure function of the trial table (plus the points).

inline json summarize_disordered(const std::vector<ScenarioPoint>& points, const TrialTable& t, const json& sc) {
    const auto gens = detail::get_or<std::vector<std::size_t>>(sc, "by_generation", {30});
    const auto cs = detail::get_or<std::vector<double>>(sc, "c_values", {1.0, 2.0, 5.0});
    json out = json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto ext = t.values("extinction_generation", k);
        const auto m = static_cast<double>(points[k].ga->size);
        json p = detail::point_header(points[k]);
        p["trials"] = ext.size();
        json by_gen = json::object();
        for (auto g : gens) {
            const auto hit = std::count_if(ext.begin(), ext.end(), [&](double e) { return !std::isnan(e) && e <= static_cast<double>(g); });
            by_gen[std::to_string(g)] = static_cast<double>(hit) / static_cast<double>(ext.size());
        }
        p["extinct_fraction_by_generation"] = by_gen;
        json by_c = json::object();
        for (double c : cs) {
            const double cut = c * std::log(m);
            const auto hit = std::count_if(ext.begin(), ext.end(), [&](double e) { return !std::isnan(e) && e <= cut; });
            by_c[format_number(c)] = static_cast<double>(hit) / static_cast<double>(ext.size());
        }
        p["extinct_fraction_by_c_ln_m"] = by_c;
        const auto done = detail::finite_only(ext);
        p["mean_extinction_generation"] = detail::num(stats::mean(done));
        p["censored"] = ext.size() - done.size();
        out.push_back(p);
    }
    json s{{"points", out}};
    if (points.size() > 1) {
        json mono = json::object();
        for (auto g : gens) {
            bool ok = true;
            for (std::size_t k = 1; k < points.size(); ++k) {
                if (points[k].pi < points[k - 1].pi &&
                    out[k]["extinct_fraction_by_generation"][std::to_string(g)].get<double>() <
                        out[k - 1]["extinct_fraction_by_generation"][std::to_string(g)].get<double>())
                    ok = false;
                if (points[k].pi > points[k - 1].pi &&
                    out[k]["extinct_fraction_by_generation"][std::to_string(g)].get<double>() >
                        out[k - 1]["extinct_fraction_by_generation"][std::to_string(g)].get<double>())
                    ok = false;
            }
            mono[std::to_string(g)] = ok;
        }
        s["extinct_fraction_non_increasing_in_pi"] = mono;
    }
    return s;
}

inline json summarize_quasispecies(const std::vector<ScenarioPoint>& points, const TrialTable& t) {
    json out = json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto surv = t.values("survived", k);
        const std::size_t s = detail::count_true(surv);
        const auto [lo, hi] = stats::wilson(s, surv.size());
        json p = detail::point_header(points[k]);
        p["trials"] = surv.size();
        p["survival_frequency"] = static_cast<double>(s) / static_cast<double>(surv.size());
        p["survival_ci95"] = {lo, hi};
        p["median_loss_generation"] = detail::num(stats::median(detail::finite_only(t.values("loss_generation", k))));
        out.push_back(p);
    }
    return {{"points", out}};
}

inline json summarize_catastrophe(const std::vector<ScenarioPoint>& points, const TrialTable& t) {
    json out = json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto time = t.values("first_catastrophe", k);
        const auto cens = t.values("censored", k);
        json p = detail::point_header(points[k]);
        p["trials"] = time.size();
        p["fraction_without_catastrophe"] = static_cast<double>(detail::count_true(cens)) / static_cast<double>(cens.size());
        p["median_catastrophe_time_censored_at_horizon"] = detail::num(stats::median(time));
        p["catastrophes"] = cens.size() - detail::count_true(cens);
        out.push_back(p);
    }
    return {{"points", out}};
}

inline json summarize_hitting(const std::vector<ScenarioPoint>& points, const TrialTable& t) {
    json out = json::array();
    std::vector<double> log_l, log_mean;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto tau = t.values("tau_star", k);
        const auto cens = t.values("censored", k);
        std::vector<double> uncensored;
        for (std::size_t i = 0; i < tau.size(); ++i)
            if (cens[i] == 0.0) uncensored.push_back(tau[i]);
        json p = detail::point_header(points[k]);
        p["trials"] = tau.size();
        p["censored"] = detail::count_true(cens);
        p["mean_tau_uncensored"] = detail::num(stats::mean(uncensored));
        p["mean_tau_with_cap"] = detail::num(stats::mean(tau));
        p["median_tau_with_cap"] = detail::num(stats::median(tau));
        out.push_back(p);
        const double mt = stats::mean(tau);
        if (mt > 0.0) {
            log_l.push_back(std::log(static_cast<double>(points[k].ga->length)));
            log_mean.push_back(std::log(mt));
        }
    }
    json s{{"points", out}};
    if (log_l.size() >= 2) {
        // Log-log slope of mean tau* against l, and the successive growth ratios.
        double slope = kMissing;
        if (log_l.size() == 2) slope = (log_mean[1] - log_mean[0]) / (log_l[1] - log_l[0]);
        else slope = stats::ols(log_l, log_mean).slope;
        s["loglog_slope_mean_tau_vs_ell"] = detail::num(slope);
    }
    return s;
}

inline json summarize_stationary(const std::vector<ScenarioPoint>& points, const TrialTable& t,
                                 const std::vector<double>& exact_mass) {
    json out = json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        json p = detail::point_header(points[k]);
        const auto l1 = t.values("l1_error", k);
        p["trials"] = l1.size();
        p["exact_optimum_mass"] = exact_mass[k];
        p["mean_empirical_optimum_mass"] = detail::num(stats::mean(t.values("empirical_optimum_mass", k)));
        p["max_l1_error"] = detail::num(l1.empty() ? kMissing : *std::max_element(l1.begin(), l1.end()));
        out.push_back(p);
    }
    return {{"points", out}};
}

inline json summarize_equilibrium(const std::vector<ScenarioPoint>& points, const TrialTable& t) {
    json out = json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto frac = t.values("mean_fraction", k);
        const auto absorbed = t.values("absorbed", k);
        std::vector<double> kept;
        for (std::size_t i = 0; i < frac.size(); ++i)
            if (absorbed[i] == 0.0) kept.push_back(frac[i]);
        json p = detail::point_header(points[k]);
        p["trials"] = frac.size();
        p["absorbed"] = detail::count_true(absorbed);
        const double mean = stats::mean(kept);
        p["quasi_stationary_mean"] = detail::num(mean);
        p["abs_error_vs_rho_star"] = detail::num(std::abs(mean - points[k].rho_star));
        out.push_back(p);
    }
    return {{"points", out}};
}

inline json summarize_persistence(const std::vector<ScenarioPoint>& points, const TrialTable& t) {
    json out = json::array();
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto tau = t.values("tau0", k);
        const auto cens = t.values("censored", k);
        std::vector<double> logs, logs_unc;
        for (std::size_t i = 0; i < tau.size(); ++i) {
            logs.push_back(std::log(tau[i]));
            if (cens[i] == 0.0) logs_unc.push_back(std::log(tau[i]));
        }
        const double censored_fraction = static_cast<double>(detail::count_true(cens)) / static_cast<double>(cens.size());
        const bool excluded = censored_fraction > 0.5;
        json p = detail::point_header(points[k]);
        p["m"] = points[k].aux->size();
        p["trials"] = tau.size();
        p["censored_fraction"] = censored_fraction;
        p["excluded"] = excluded;
        p["mean_log_tau0_with_cap"] = detail::num(stats::mean(logs));
        p["mean_log_tau0_uncensored"] = detail::num(stats::mean(logs_unc));
        p["mean_tau0_with_cap"] = detail::num(stats::mean(tau));
        out.push_back(p);
        if (!excluded)
            for (double y : logs) {
                xs.push_back(static_cast<double>(points[k].aux->size()));
                ys.push_back(y);
            }
    }
    json s{{"points", out}};
    const auto reg = stats::ols(xs, ys);
    s["slope_log_tau0_vs_m"] = detail::num(reg.slope);
    s["slope_stderr"] = detail::num(reg.stderr_slope);
    s["slope_t_stat"] = detail::num(reg.t_stat);
    s["slope_positive_95"] = !std::isnan(reg.t_stat) && reg.t_stat > stats::kOneSided95;
    return s;
}

// ---------------------------------------------------------------------------
// Trial bodies.

namespace trials {

/// First n >= 1 with no exact Master copy; NaN if the horizon is reached first.
inline std::vector<double> disordered(const ScenarioPoint& pt, std::uint64_t seed, StartKind start) {
    const GAConfig& c = *pt.ga;
    const Engine engine(c);
    Stream rng(derive_seed(seed, 0, "engine"));
    Population x = make_start(start, c.size, c.length, seed), next(c.size, c.length);
    std::vector<double> fit = fitness_values(x, c.landscape);
    RandomBlock b;
    RankAssignment ranks;
    for (std::size_t n = 1; n <= c.horizon; ++n) {
        engine.draw_block(rng, b);
        engine.step(x, fit, b, next, ranks);
        std::swap(x, next);
        bool any = false;
        for (std::size_t i = 0; i < c.size; ++i) {
            any = any || x[i].all_ones();
            fit[i] = c.landscape(x[i]);
        }
        if (!any) return {static_cast<double>(n), 1.0};
    }
    return {kMissing, 0.0};
}

/// Whether N(X_n, lambda_0) >= 1 for every n up to the horizon, lambda_0 the best initial fitness.
inline std::vector<double> quasispecies(const ScenarioPoint& pt, std::uint64_t seed, StartKind start) {
    const GAConfig& c = *pt.ga;
    const Engine engine(c);
    Stream rng(derive_seed(seed, 0, "engine"));
    Population x = make_start(start, c.size, c.length, seed), next(c.size, c.length);
    std::vector<double> fit = fitness_values(x, c.landscape);
    const double lambda0 = *std::max_element(fit.begin(), fit.end());
    RandomBlock b;
    RankAssignment ranks;
    for (std::size_t n = 1; n <= c.horizon; ++n) {
        engine.draw_block(rng, b);
        engine.step(x, fit, b, next, ranks);
        std::swap(x, next);
        for (std::size_t i = 0; i < c.size; ++i) fit[i] = c.landscape(x[i]);
        if (count_at_least(fit, lambda0) == 0) return {0.0, static_cast<double>(n)};
    }
    return {1.0, kMissing};
}

/// First catastrophe time at fraction rho = rho* (1 - margin); the horizon when none occurs.
inline std::vector<double> catastrophe(const ScenarioPoint& pt, std::uint64_t seed, StartKind start, double margin) {
    const GAConfig& c = *pt.ga;
    const Engine engine(c);
    Stream rng(derive_seed(seed, 0, "engine"));
    Population x = make_start(start, c.size, c.length, seed), next(c.size, c.length);
    std::vector<double> fit = fitness_values(x, c.landscape);
    const double rho = std::max(pt.rho_star * (1.0 - margin), 1.0 / static_cast<double>(c.size));
    CatastropheTracker tracker(std::min(1.0, rho));
    if (tracker.observe(fit)) return {0.0, 0.0};
    RandomBlock b;
    RankAssignment ranks;
    for (std::size_t n = 1; n <= c.horizon; ++n) {
        engine.draw_block(rng, b);
        engine.step(x, fit, b, next, ranks);
        std::swap(x, next);
        for (std::size_t i = 0; i < c.size; ++i) fit[i] = c.landscape(x[i]);
        if (tracker.observe(fit)) return {static_cast<double>(n), 0.0};
    }
    return {static_cast<double>(c.horizon), 1.0};
}

/// tau* = first n >= 1 whose population holds a chromosome of maximal fitness.
inline std::vector<double> hitting(const ScenarioPoint& pt, std::uint64_t seed, StartKind start) {
    const GAConfig& c = *pt.ga;
    const Engine engine(c);
    const double best = c.landscape.max_value();
    Stream rng(derive_seed(seed, 0, "engine"));
    Population x = make_start(start, c.size, c.length, seed), next(c.size, c.length);
    std::vector<double> fit = fitness_values(x, c.landscape);
    RandomBlock b;
    RankAssignment ranks;
    for (std::size_t n = 1; n <= c.horizon; ++n) {
        engine.draw_block(rng, b);
        engine.step(x, fit, b, next, ranks);
        std::swap(x, next);
        for (std::size_t i = 0; i < c.size; ++i) fit[i] = c.landscape(x[i]);
        if (count_at_least(fit, best) > 0) return {static_cast<double>(n), 0.0};
    }
    return {static_cast<double>(c.horizon), 1.0};
}

/// Occupation measure of one long run against the exact invariant measure.
inline std::vector<double> stationary(const ScenarioPoint& pt, std::uint64_t seed, const StateSpace& space,
                                      const Eigen::VectorXd& mu, const std::vector<char>& has_opt) {
    const GAConfig& c = *pt.ga;
    const Engine engine(c);
    Stream rng(derive_seed(seed, 0, "engine"));
    Stream pick(derive_seed(seed, 0, "start"));
    Population x = space.decode(static_cast<std::size_t>(pick.uniform_int(0, space.states() - 1)));
    Population next(c.size, c.length);
    std::vector<double> fit = fitness_values(x, c.landscape);
    std::vector<std::uint64_t> visits(space.states(), 0);
    RandomBlock b;
    RankAssignment ranks;
    for (std::size_t n = 1; n <= c.horizon; ++n) {
        engine.draw_block(rng, b);
        engine.step(x, fit, b, next, ranks);
        std::swap(x, next);
        for (std::size_t i = 0; i < c.size; ++i) fit[i] = c.landscape(x[i]);
        ++visits[space.encode(x)];
    }
    double l1 = 0.0, opt = 0.0;
    for (std::size_t s = 0; s < space.states(); ++s) {
        const double f = static_cast<double>(visits[s]) / static_cast<double>(c.horizon);
        l1 += std::abs(f - mu(static_cast<Eigen::Index>(s)));
        if (has_opt[s]) opt += f;
    }
    return {l1, opt};
}

inline std::vector<double> equilibrium(const ScenarioPoint& pt, std::uint64_t seed, std::size_t start,
                                       std::size_t burn_in, std::size_t window) {
    Stream rng(derive_seed(seed, 0, "aux"));
    const auto q = quasi_stationary(*pt.aux, start, burn_in, window, rng);
    return {q.absorbed ? kMissing : q.mean_fraction, q.absorbed ? 1.0 : 0.0};
}

inline std::vector<double> persistence(const ScenarioPoint& pt, std::uint64_t seed, std::size_t start,
                                       std::size_t cap) {
    Stream rng(derive_seed(seed, 0, "aux"));
    const auto r = simulate_hitting(*pt.aux, start, HitTarget::absorption, 0.0, cap, rng);
    return {static_cast<double>(r.time), r.outcome == HitOutcome::timeout ? 1.0 : 0.0};
}

} // namespace trials

// ---------------------------------------------------------------------------
// Entry point.

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"disordered",      "quasispecies",         "catastrophe",
                                                "hitting-time",    "stationary-tiny",      "auxchain-equilibrium",
                                                "auxchain-persistence"};
    return names;
}

/// Runs the scenario named in rc.scenario["name"] (or `name` when given).
inline ScenarioResult run_scenario(RunConfig rc, const RunOptions& opt = {}, std::string name = "") {
    if (name.empty()) name = detail::get_or<std::string>(rc.scenario, "name", "");
    if (std::find(scenario_names().begin(), scenario_names().end(), name) == scenario_names().end())
        throw config_error("unknown scenario: '" + name + "'");
    json& sc = rc.scenario;
    sc["name"] = name;
    if (opt.horizon) rc.engine["horizon"] = *opt.horizon;
    else if (sc.contains("horizon")) rc.engine["horizon"] = sc["horizon"];
    const std::size_t n_trials = opt.trials ? *opt.trials : detail::get_or<std::size_t>(sc, "trials", 100);
    if (n_trials == 0) throw config_error("trials must be >= 1");
    const std::uint64_t master =
        opt.seed ? *opt.seed : detail::get_or<std::uint64_t>(sc, "seed", detail::get_or<std::uint64_t>(rc.engine, "seed", 0));

    const bool aux = name.rfind("auxchain", 0) == 0;
    const auto points = detail::expand_points(rc, aux);
    const auto start_default = name == "hitting-time" ? "zeros" : "master-over-zeros";
    const StartKind start =
        aux ? StartKind::master_over_zeros : parse_start(detail::get_or<std::string>(sc, "start", start_default));

    ScenarioResult res;
    res.scenario = name;
    json summary;
    const auto t0 = std::chrono::steady_clock::now();

    if (name == "disordered") {
        for (const auto& p : points)
            if (!(p.pi < 1.0))
                throw config_error("disordered scenario requires pi < 1; measured pi = " + format_number(p.pi));
        res.table = detail::run_trials(name, points, n_trials, master, opt.workers, {"extinction_generation", "extinct"},
                                       [&](const ScenarioPoint& p, std::uint64_t s) { return trials::disordered(p, s, start); });
        summary = summarize_disordered(points, res.table, sc);
    } else if (name == "quasispecies") {
        for (const auto& p : points)
            if (!(p.pi > 1.0))
                throw config_error("quasispecies scenario requires pi > 1; measured pi = " + format_number(p.pi));
        res.table = detail::run_trials(name, points, n_trials, master, opt.workers, {"survived", "loss_generation"},
                                       [&](const ScenarioPoint& p, std::uint64_t s) { return trials::quasispecies(p, s, start); });
        summary = summarize_quasispecies(points, res.table);
    } else if (name == "catastrophe") {
        for (const auto& p : points)
            if (!(p.pi > 1.0))
                throw config_error("catastrophe scenario requires pi > 1; measured pi = " + format_number(p.pi));
        const double margin = detail::get_or<double>(sc, "margin", 0.2);
        if (!(margin >= 0.0 && margin < 1.0)) throw config_error("margin must lie in [0,1)");
        res.table = detail::run_trials(name, points, n_trials, master, opt.workers, {"first_catastrophe", "censored"},
                                       [&](const ScenarioPoint& p, std::uint64_t s) {
                                           return trials::catastrophe(p, s, start, margin);
                                       });
        summary = summarize_catastrophe(points, res.table);
        summary["margin"] = margin;
    } else if (name == "hitting-time") {
        for (const auto& p : points) {
            const auto kind = p.ga->landscape.kind();
            if (kind != LandscapeKind::one_max && kind != LandscapeKind::staircase_table &&
                kind != LandscapeKind::sharp_peak)
                throw config_error("hitting-time needs a landscape with a known optimum");
        }
        res.table = detail::run_trials(name, points, n_trials, master, opt.workers, {"tau_star", "censored"},
                                       [&](const ScenarioPoint& p, std::uint64_t s) { return trials::hitting(p, s, start); });
        summary = summarize_hitting(points, res.table);
    } else if (name == "stationary-tiny") {
        std::vector<StateSpace> spaces;
        std::vector<Eigen::VectorXd> mus;
        std::vector<std::vector<char>> opts;
        std::vector<double> exact_mass;
        for (const auto& p : points) {
            ExactChain chain(*p.ga);
            const auto mat = chain.transition_matrix();
            mus.push_back(stationary_distribution(mat));
            spaces.push_back(chain.space());
            std::vector<char> flag(chain.states(), 0);
            for (auto s : states_with_optimum(chain.space(), p.ga->landscape)) flag[s] = 1;
            double mass = 0.0;
            for (std::size_t s = 0; s < flag.size(); ++s)
                if (flag[s]) mass += mus.back()(static_cast<Eigen::Index>(s));
            exact_mass.push_back(mass);
            opts.push_back(std::move(flag));
        }
        std::vector<std::size_t> index(points.size());
        res.table = detail::run_trials(name, points, n_trials, master, opt.workers, {"l1_error", "empirical_optimum_mass"},
                                       [&](const ScenarioPoint& p, std::uint64_t s) {
                                           const auto k = static_cast<std::size_t>(&p - points.data());
                                           return trials::stationary(p, s, spaces[k], mus[k], opts[k]);
                                       });
        summary = summarize_stationary(points, res.table, exact_mass);
    } else if (name == "auxchain-equilibrium") {
        for (const auto& p : points)
            if (!(p.pi > 1.0))
                throw config_error("auxchain-equilibrium requires pi > 1; measured pi = " + format_number(p.pi));
        const auto window = detail::get_or<std::size_t>(sc, "window", 10000);
        res.table = detail::run_trials(
            name, points, n_trials, master, opt.workers, {"mean_fraction", "absorbed"},
            [&](const ScenarioPoint& p, std::uint64_t s) {
                const std::size_t m = p.aux->size();
                const double frac = detail::get_or<double>(sc, "start_fraction", p.rho_star);
                const auto start_n = std::clamp<std::size_t>(
                    static_cast<std::size_t>(std::floor(frac * static_cast<double>(m))), 1, m);
                const auto burn = detail::get_or<std::size_t>(sc, "burn_in", default_burn_in(m));
                return trials::equilibrium(p, s, start_n, burn, window);
            });
        summary = summarize_equilibrium(points, res.table);
        summary["window"] = window;
    } else { // auxchain-persistence
        const auto cap = detail::get_or<std::size_t>(sc, "cap", 1'000'000);
        res.table = detail::run_trials(
            name, points, n_trials, master, opt.workers, {"tau0", "censored"},
            [&](const ScenarioPoint& p, std::uint64_t s) {
                const std::size_t m = p.aux->size();
                const double rho = std::isnan(p.rho_star) ? 0.0 : p.rho_star;
                std::size_t start_n = static_cast<std::size_t>(std::floor(rho * static_cast<double>(m)));
                if (sc.contains("start_state")) start_n = sc["start_state"].get<std::size_t>();
                start_n = std::clamp<std::size_t>(start_n, 1, m);
                return trials::persistence(p, s, start_n, cap);
            });
        summary = summarize_persistence(points, res.table);
        summary["cap"] = cap;
    }

    const auto t1 = std::chrono::steady_clock::now();
    summary["scenario"] = name;
    summary["master_seed"] = master;
    summary["trials_per_point"] = n_trials;
    summary["config"] = {{"engine", rc.engine}, {"scheme", rc.scheme}, {"landscape", rc.landscape}, {"scenario", sc}};
    summary["wall_time_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    res.summary = std::move(summary);
    return res;
}

/// Writes <out>/trials.csv and <out>/summary.json.
inline void write_outputs(const ScenarioResult& r, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    {
        std::ofstream f(out / "trials.csv", std::ios::binary);
        f << to_csv(r.scenario, r.table);
    }
    std::ofstream f(out / "summary.json");
    f << r.summary.dump(2) << "\n";
}

} // namespace qsga
