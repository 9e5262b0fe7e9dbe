// Command-line front end: simulate, auxchain, theory, experiment, oracle.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "qsga/qsga.hpp"

namespace fs = std::filesystem;
using namespace qsga;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> horizon;
    std::string out = "out";
    std::size_t workers = 1;
    bool dump_populations = false;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON config file")->required()->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "master seed (overrides the config)");
    app->add_option("--trials", c.trials, "number of trials");
    app->add_option("--horizon", c.horizon, "generations per run");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    app->add_flag("--dump-populations", c.dump_populations, "write every population of a simulate run");
}

RunConfig load(const Common& c) {
    RunConfig rc = load_run_config(c.config);
    if (c.seed) rc.engine["seed"] = *c.seed;
    if (c.horizon) rc.engine["horizon"] = *c.horizon;
    if (c.seed || c.horizon) rc = parse_run_config(json{{"engine", rc.engine}, {"scheme", rc.scheme},
                                                         {"landscape", rc.landscape}, {"scenario", rc.scenario}});
    return rc;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

int cmd_simulate(const Common& c) {
    const RunConfig rc = load(c);
    if (!rc.has_ga) throw config_error("simulate needs engine.ell");
    const GAConfig& g = rc.ga;
    const StartKind start = parse_start(detail::get_or<std::string>(rc.scenario, "start", "master-over-zeros"));
    TraceOptions opt;
    opt.rhos = detail::get_or<std::vector<double>>(rc.scenario, "rhos", {});
    opt.lambdas = detail::get_or<std::vector<double>>(rc.scenario, "lambdas", g.landscape.value_set());
    opt.genealogy = true;
    if (auto pi = g.pi(); pi && *pi > 1.0) opt.catastrophe_rho = 0.8 * rho_star(g.scheme, std::min(*pi, drift(g.scheme)));
    opt.dump_populations = c.dump_populations;
    const Population x0 = make_start(start, g.size, g.length, g.seed);
    const auto trace = run(g, x0, opt);

    fs::create_directories(c.out);
    std::string csv = "generation,best_fitness";
    for (double r : opt.rhos) csv += ",level_rho_" + format_number(r);
    for (double l : opt.lambdas) csv += ",count_ge_" + format_number(l);
    csv += ",total_progeny,master_copies,max_ones_non_progeny,catastrophe\n";
    std::string pops;
    for (const auto& r : trace) {
        csv += std::to_string(r.generation) + "," + format_number(r.best);
        for (double v : r.levels) csv += "," + format_number(v);
        for (auto v : r.counts) csv += "," + std::to_string(v);
        csv += "," + std::to_string(*r.total_progeny) + "," + std::to_string(*r.master_copies) + ",";
        if (r.max_ones_non_progeny) csv += std::to_string(*r.max_ones_non_progeny);
        csv += std::string(",") + (r.catastrophe ? "1" : "0") + "\n";
        if (r.population) {
            pops += "# generation " + std::to_string(r.generation) + "\n";
            for (std::size_t i = 0; i < r.population->size(); ++i) pops += (*r.population)[i].to_string() + "\n";
        }
    }
    write_text(fs::path(c.out) / "trace.csv", csv);
    if (c.dump_populations) write_text(fs::path(c.out) / "populations.txt", pops);
    json s{{"pi", g.pi() ? json(*g.pi()) : json(nullptr)}, {"p_M", g.p_m}, {"generations", g.horizon},
           {"final_best_fitness", trace.back().best}, {"final_master_copies", *trace.back().master_copies}};
    write_text(fs::path(c.out) / "summary.json", s.dump(2) + "\n");
    std::cout << s.dump(2) << "\n";
    return 0;
}

int cmd_auxchain(const Common& c) {
    const RunConfig rc = load(c);
    const AuxParams p = build_aux_params(rc.engine, rc.scheme);
    const std::size_t m = p.size();
    const std::uint64_t seed = c.seed ? *c.seed : detail::get_or<std::uint64_t>(rc.engine, "seed", 0);
    const std::size_t horizon = c.horizon ? *c.horizon : detail::get_or<std::size_t>(rc.engine, "horizon", 100);
    const double rho = p.pi() && *p.pi() > 1.0 ? rho_star(p.scheme(), std::min(*p.pi(), drift(p.scheme()))) : 0.0;
    std::size_t n = detail::get_or<std::size_t>(rc.scenario, "start_state", level_index(rho > 0.0 ? rho : 1.0, m));
    if (n > m) throw config_error("auxchain start exceeds m");
    Stream rng(derive_seed(seed, 0, "aux"));
    std::string csv = "generation,N,fraction,expected_next\n";
    for (std::size_t t = 0;; ++t) {
        csv += std::to_string(t) + "," + std::to_string(n) + "," + format_number(double(n) / double(m)) + "," +
               format_number(expected_next(p, n)) + "\n";
        if (t == horizon) break;
        n = sample_step(p, n, rng);
    }
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "trace.csv", csv);
    json s{{"m", m}, {"survive", p.survive_prob()}, {"pi", p.pi() ? json(*p.pi()) : json(nullptr)},
           {"rho_star", rho}, {"final_N", n}};
    write_text(fs::path(c.out) / "summary.json", s.dump(2) + "\n");
    std::cout << s.dump(2) << "\n";
    return 0;
}

int cmd_theory(const Common& c, bool grids, std::size_t resolution) {
    const RunConfig rc = load(c);
    const SelectionScheme scheme = parse_scheme(rc.scheme);
    double pi = 0.0;
    if (rc.has_ga) {
        pi = *rc.ga.pi();
    } else {
        pi = *build_aux_params(rc.engine, rc.scheme).pi();
    }
    const double sigma = drift(scheme);
    json s{{"pi", pi}, {"sigma", sigma}, {"regime", regime_name(regime_of(pi))}};
    const double rho = rho_star(scheme, std::min(pi, sigma));
    s["rho_star"] = rho;
    if (auto cf = rho_star_closed_form(scheme, pi)) s["rho_star_closed_form"] = *cf;
    if (grids) {
        const auto g1 = build_v1_grid(scheme, pi, resolution, 1.0 / 512.0, c.workers);
        const auto g = v_closure(g1);
        const fs::path dir = fs::path(c.out) / "grids";
        fs::create_directories(dir);
        auto dump = [&](const RateGrid& grid, const fs::path& p) {
            std::string csv = "s,t,value,p_star,beta_star\n";
            for (std::size_t i = 0; i < grid.points(); ++i)
                for (std::size_t j = 0; j < grid.points(); ++j) {
                    const std::size_t k = i * grid.points() + j;
                    csv += format_number(grid.coord(i)) + "," + format_number(grid.coord(j)) + "," +
                           format_number(grid.value[k]) + "," +
                           (grid.p_star.empty() ? "" : format_number(grid.p_star[k])) + "," +
                           (grid.beta_star.empty() ? "" : format_number(grid.beta_star[k])) + "\n";
                }
            write_text(p, csv);
        };
        dump(g1, dir / "v1.csv");
        dump(g, dir / "v.csv");
        if (rho > 0.0) s["V_rho_star_to_0"] = g.lookup(rho, 0.0);
        s["grid_resolution"] = resolution;
    }
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "summary.json", s.dump(2) + "\n");
    std::cout << s.dump(2) << "\n";
    return 0;
}

int cmd_experiment(const Common& c, const std::string& scenario) {
    RunConfig rc = load_run_config(c.config);
    RunOptions opt;
    opt.trials = c.trials;
    opt.horizon = c.horizon;
    opt.seed = c.seed;
    opt.workers = c.workers;
    const auto res = run_scenario(rc, opt, scenario);
    write_outputs(res, c.out);
    json brief = res.summary;
    brief.erase("config");
    std::cout << brief.dump(2) << "\n";
    return 0;
}

int cmd_oracle(const Common& c) {
    const RunConfig rc = load(c);
    if (!rc.has_ga) throw config_error("oracle needs engine.ell");
    ExactChain chain(rc.ga);
    const Eigen::MatrixXd p = chain.transition_matrix();
    const Eigen::VectorXd mu = stationary_distribution(p);
    double opt_mass = 0.0;
    for (auto s : states_with_optimum(chain.space(), rc.ga.landscape)) opt_mass += mu(static_cast<Eigen::Index>(s));
    fs::create_directories(c.out);
    std::string csv = "state,population,mu\n";
    for (std::size_t s = 0; s < chain.states(); ++s) {
        const Population x = chain.space().decode(s);
        std::string pop;
        for (std::size_t i = 0; i < x.size(); ++i) pop += (i ? " " : "") + x[i].to_string();
        csv += std::to_string(s) + "," + pop + "," + format_number(mu(static_cast<Eigen::Index>(s))) + "\n";
    }
    write_text(fs::path(c.out) / "stationary.csv", csv);
    json s{{"states", chain.states()}, {"max_row_sum_error", max_row_sum_error(p)},
           {"irreducible", is_irreducible(p)}, {"optimum_mass", opt_mass}};
    write_text(fs::path(c.out) / "summary.json", s.dump(2) + "\n");
    std::cout << s.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ranking-selection genetic algorithm simulator and analysis tools"};
    app.require_subcommand(1);
    Common c;
    auto* sim = app.add_subcommand("simulate", "run one trajectory and write its trace");
    add_common(sim, c);
    auto* aux = app.add_subcommand("auxchain", "run the auxiliary counting chain");
    add_common(aux, c);
    auto* th = app.add_subcommand("theory", "print pi, the regime and rho*, optionally dump rate grids");
    add_common(th, c);
    bool grids = false;
    std::size_t resolution = 256;
    th->add_flag("--grids", grids, "write grids/v1.csv and grids/v.csv");
    th->add_option("--resolution", resolution, "lattice intervals per axis")->check(CLI::PositiveNumber);
    auto* ex = app.add_subcommand("experiment", "run a scenario and write trials.csv and summary.json");
    std::string scenario;
    ex->add_option("scenario", scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names()));
    add_common(ex, c);
    auto* orc = app.add_subcommand("oracle", "exact transition matrix and invariant measure of a tiny instance");
    add_common(orc, c);

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return cmd_simulate(c);
        if (aux->parsed()) return cmd_auxchain(c);
        if (th->parsed()) return cmd_theory(c, grids, resolution);
        if (ex->parsed()) return cmd_experiment(c, scenario);
        if (orc->parsed()) return cmd_oracle(c);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
