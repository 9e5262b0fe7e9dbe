#pragma once

/// @file config.hpp
/// Run configuration files (JSON) with sections engine, scheme, landscape and
/// scenario.
///
///     {
///       "engine":    {"ell": 100, "m": 100, "p_C": 0.0, "pi": 0.8, "seed": 1, "horizon": 50},
///       "scheme":    {"kind": "tournament", "t": 2},
///       "landscape": {"kind": "sharp-peak"},
///       "scenario":  {"name": "disordered", "trials": 1000, "by_generation": [30]}
///     }
///
/// The engine section takes either "p_M" or "pi"; with "pi", p_M is solved
/// from sigma (1 - p_C)(1 - p_M)^l = pi.

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"

#include "qsga/auxchain.hpp"
#include "qsga/core.hpp"
#include "qsga/engine.hpp"
#include "qsga/errors.hpp"
#include "qsga/selection.hpp"
#include "qsga/theory.hpp"

namespace qsga {

using json = nlohmann::json;

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error(std::string("config key '") + key + "': " + e.what());
    }
}

template <class T>
T require(const json& j, const char* key, const char* section) {
    if (!j.is_object() || !j.contains(key))
        throw config_error(std::string("config section '") + section + "' is missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error(std::string("config key '") + key + "': " + e.what());
    }
}

} // namespace detail

inline SelectionScheme parse_scheme(const json& j) {
    const auto kind = detail::require<std::string>(j, "kind", "scheme");
    if (kind == "tournament") return SelectionScheme::tournament(detail::require<std::size_t>(j, "t", "scheme"));
    if (kind == "linear-ranking")
        return SelectionScheme::linear_ranking(detail::require<double>(j, "eta_minus", "scheme"),
                                               detail::require<double>(j, "eta_plus", "scheme"));
    if (kind == "custom") return SelectionScheme::custom(detail::require<std::vector<double>>(j, "table", "scheme"));
    throw config_error("unknown selection scheme kind: " + kind);
}

inline json scheme_to_json(const SelectionScheme& s) {
    switch (s.kind) {
    case SchemeKind::tournament: return {{"kind", "tournament"}, {"t", s.t}};
    case SchemeKind::linear_ranking:
        return {{"kind", "linear-ranking"}, {"eta_minus", s.eta_minus}, {"eta_plus", s.eta_plus}};
    case SchemeKind::custom: return {{"kind", "custom"}, {"table", s.table}};
    }
    return {};
}

/// Landscape for chromosomes of length l. Staircase levels default to the
/// number of leading ones when "levels" is absent.
inline FitnessLandscape parse_landscape(const json& j, std::size_t l) {
    const auto kind = detail::require<std::string>(j, "kind", "landscape");
    if (kind == "sharp-peak") return FitnessLandscape::sharp_peak(l);
    if (kind == "one-max") return FitnessLandscape::one_max(l);
    if (kind == "staircase-table") {
        std::vector<double> levels;
        if (j.contains("levels")) {
            levels = detail::require<std::vector<double>>(j, "levels", "landscape");
        } else {
            for (std::size_t k = 0; k <= l; ++k) levels.push_back(static_cast<double>(k));
        }
        return FitnessLandscape::staircase(l, std::move(levels));
    }
    if (kind == "custom-table")
        return FitnessLandscape::custom(l, detail::get_or<std::map<std::string, double>>(j, "table", {}),
                                        detail::get_or<double>(j, "fallback", 0.0));
    throw config_error("unknown landscape kind: " + kind);
}

/// Parsed run configuration.
struct RunConfig {
    GAConfig ga;
    bool has_ga = false; ///< the engine section names a chromosome length
    json engine;    ///< raw sections, kept for sweeps and the summary echo
    json scheme;
    json landscape;
    json scenario;
    std::optional<double> pi_target; ///< set when the engine section gave "pi"
};

/// Resolves l, m, p_C and p_M (directly, or from a target pi) into a GAConfig.
inline GAConfig build_ga_config(const json& engine, const json& scheme, const json& landscape,
                                std::optional<double>* pi_target = nullptr) {
    GAConfig c;
    c.length = detail::require<std::size_t>(engine, "ell", "engine");
    c.size = detail::require<std::size_t>(engine, "m", "engine");
    c.p_c = detail::get_or<double>(engine, "p_C", 0.0);
    c.scheme = parse_scheme(scheme);
    c.landscape = parse_landscape(landscape, c.length);
    c.seed = detail::get_or<std::uint64_t>(engine, "seed", 0);
    c.horizon = detail::get_or<std::size_t>(engine, "horizon", 100);
    const bool has_pm = engine.contains("p_M"), has_pi = engine.contains("pi");
    if (has_pm == has_pi) throw config_error("engine section needs exactly one of 'p_M' and 'pi'");
    if (has_pm) {
        c.p_m = detail::require<double>(engine, "p_M", "engine");
        if (pi_target) pi_target->reset();
    } else {
        const double pi = detail::require<double>(engine, "pi", "engine");
        if (c.scheme.kind == SchemeKind::custom) throw config_error("'pi' needs a scheme with a selection drift");
        const double top = drift(c.scheme) * (1.0 - c.p_c);
        if (!(pi > 0.0 && pi <= top))
            throw config_error("pi = " + std::to_string(pi) + " is unreachable: the maximum with this p_C is " +
                               std::to_string(top));
        c.p_m = mutation_for_survive(pi / top, c.length);
        if (pi_target) *pi_target = pi;
    }
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("invalid engine configuration: ") + e.what());
    }
    return c;
}

/// Auxiliary-chain parameters from the engine section: "m", "p_C", and one of
/// "survive", "pi", or "p_M" with "ell".
inline AuxParams build_aux_params(const json& engine, const json& scheme) {
    const auto m = detail::require<std::size_t>(engine, "m", "engine");
    const double p_c = detail::get_or<double>(engine, "p_C", 0.0);
    auto sch = parse_scheme(scheme);
    const int given = int(engine.contains("survive")) + int(engine.contains("pi")) + int(engine.contains("p_M"));
    if (given != 1) throw config_error("engine section needs exactly one of 'survive', 'pi' and 'p_M'");
    try {
        if (engine.contains("survive")) return AuxParams(m, sch, p_c, detail::require<double>(engine, "survive", "engine"));
        if (engine.contains("p_M"))
            return AuxParams::from_mutation(m, sch, p_c, detail::require<double>(engine, "p_M", "engine"),
                                            detail::require<std::size_t>(engine, "ell", "engine"));
        const double pi = detail::require<double>(engine, "pi", "engine");
        if (sch.kind == SchemeKind::custom) throw config_error("'pi' needs a scheme with a selection drift");
        const double top = drift(sch) * (1.0 - p_c);
        if (!(pi > 0.0 && pi <= top))
            throw config_error("pi = " + std::to_string(pi) + " is unreachable: the maximum with this p_C is " +
                               std::to_string(top));
        return AuxParams(m, sch, p_c, pi / top);
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error(std::string("invalid auxiliary chain configuration: ") + e.what());
    }
}

inline RunConfig parse_run_config(const json& root) {
    if (!root.is_object()) throw config_error("config root must be an object");
    RunConfig rc;
    rc.engine = root.value("engine", json::object());
    rc.scheme = root.value("scheme", json{{"kind", "tournament"}, {"t", 2}});
    rc.landscape = root.value("landscape", json{{"kind", "sharp-peak"}});
    rc.scenario = root.value("scenario", json::object());
    if (rc.engine.contains("ell")) {
        rc.ga = build_ga_config(rc.engine, rc.scheme, rc.landscape, &rc.pi_target);
        rc.has_ga = true;
    }
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw config_error("malformed JSON in " + path + ": " + e.what());
    }
    return parse_run_config(root);
}

} // namespace qsga
