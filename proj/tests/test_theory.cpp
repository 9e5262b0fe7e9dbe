#include <gtest/gtest.h>

#include "qsga/engine.hpp"
#include "qsga/theory.hpp"

using namespace qsga;

namespace {

const SelectionScheme kT2 = SelectionScheme::tournament(2);

} // namespace

TEST(PiParam, Examples) {
    EXPECT_EQ(pi_param(2.0, 0.0, 0.0, 10), 2.0);
    const double pm = mutation_for_survive(5.0 / 6.0, 7);
    EXPECT_NEAR(pi_param(2.0, 0.1, pm, 7), 1.5, 1e-12);
    EXPECT_EQ(regime_of(0.9), Regime::disordered);
    EXPECT_EQ(regime_of(1.0), Regime::critical);
    EXPECT_EQ(regime_of(1.5), Regime::quasispecies);
}

TEST(PiParam, SupercriticalImpliesLogBound) {
    // (1 - p_C)(1 - p_M)^l <= exp(-p_C - l p_M), so pi > 1 forces l p_M + p_C < ln sigma.
    Stream rng(31);
    std::size_t supercritical = 0;
    for (int k = 0; k < 100000; ++k) {
        const double sigma = 1.0 + 3.0 * rng.uniform();
        const double p_c = rng.uniform();
        const double p_m = 0.1 * rng.uniform();
        const std::size_t l = 1 + rng.uniform_int(0, 99);
        if (pi_param(sigma, p_c, p_m, l) > 1.0) {
            ++supercritical;
            EXPECT_LT(double(l) * p_m + p_c, std::log(sigma));
        }
    }
    EXPECT_GT(supercritical, 1000U);
}

TEST(BinomialRate, Examples) {
    for (double p : {0.1, 0.5, 0.9}) EXPECT_NEAR(binomial_rate(p, p), 0.0, 1e-15);
    EXPECT_NEAR(binomial_rate(0.5, 1.0), std::log(2.0), 1e-15);
    EXPECT_EQ(binomial_rate(0.3, 1.2), kInf);
    EXPECT_EQ(binomial_rate(0.0, 0.0), 0.0);
    EXPECT_EQ(binomial_rate(1.0, 0.5), kInf);
    EXPECT_THROW(binomial_rate(-0.1, 0.5), invalid_argument);
}

TEST(BinomialRate, LowerSemicontinuousAtBoundary) {
    // Along p_k -> 0 with t fixed the sampled values grow without bound, matching I(0, t) = inf.
    double prev = 0.0;
    for (int k = 3; k <= 30; ++k) {
        const double v = binomial_rate(std::pow(2.0, -k), 0.2);
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_GT(prev, 3.0);
    // Along t_k -> p the values decrease to 0.
    prev = kInf;
    for (int k = 1; k <= 20; ++k) {
        const double v = binomial_rate(0.4, 0.4 + std::pow(2.0, -k));
        EXPECT_LE(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-11);
}

TEST(PhiMap, Examples) {
    EXPECT_EQ(phi_map(kT2, 1.6, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(phi_map(kT2, 1.6, 1.0), 0.8);
    EXPECT_NEAR(phi_map(kT2, 1.6, 0.5), 0.6, 1e-15);
    EXPECT_THROW(phi_map(kT2, 1.6, 1.5), invalid_argument);
}

TEST(RhoStar, Examples) {
    EXPECT_EQ(rho_star(kT2, 0.9), 0.0);
    EXPECT_EQ(rho_star(kT2, 1.0), 0.0);
    EXPECT_NEAR(rho_star(kT2, 1.6), 0.75, 1e-10);
    EXPECT_NEAR(rho_star(SelectionScheme::linear_ranking(0.0, 2.0), 4.0 / 3.0), 0.5, 1e-10);
    EXPECT_THROW(rho_star(kT2, 2.5), invalid_argument);
}

TEST(RhoStar, IsFixedPointAndMatchesClosedForms) {
    for (const auto& s : {SelectionScheme::tournament(2), SelectionScheme::tournament(3),
                          SelectionScheme::linear_ranking(0.0, 2.0), SelectionScheme::linear_ranking(0.5, 1.5)}) {
        for (double frac : {0.55, 0.7, 0.9, 1.0}) {
            const double pi = 1.0 + frac * (drift(s) - 1.0);
            const double r = rho_star(s, pi);
            EXPECT_GT(r, 0.0);
            EXPECT_NEAR(phi_map(s, pi, r), r, 1e-10);
            if (const auto cf = rho_star_closed_form(s, pi)) EXPECT_NEAR(*cf, r, 1e-9);
        }
    }
    EXPECT_FALSE(rho_star_closed_form(SelectionScheme::tournament(3), 1.5).has_value());
    // The displayed alternative sigma/pi - 1 = 0.25 is not a fixed point at pi = 1.6.
    EXPECT_GT(std::abs(phi_map(kT2, 1.6, 0.25) - 0.25), 0.1);
}

TEST(V1, Examples) {
    EXPECT_EQ(v1(kT2, 1.6, 0.0, 0.0).value, 0.0);
    EXPECT_EQ(v1(kT2, 1.6, 0.0, 0.3).value, kInf);
    for (int k = 1; k <= 9; ++k) {
        const double s = k / 10.0;
        EXPECT_LE(v1(kT2, 1.6, s, phi_map(kT2, 1.6, s)).value, 1e-6) << s;
    }
    EXPECT_GE(v1(kT2, 1.6, 0.5, 1.0).value, 0.01);
}

TEST(V1, PositiveOffTheCurve) {
    const auto s = SelectionScheme::linear_ranking(0.2, 1.8);
    for (double x : {0.2, 0.5, 0.8})
        for (double t : {0.0, 0.05, 0.95}) {
            const double q = phi_map(s, 1.4, x);
            if (std::abs(t - q) < 0.1) continue;
            EXPECT_GT(v1(s, 1.4, x, t).value, 1e-4) << x << " " << t;
        }
}

TEST(V1, MinimizerAgainstBruteForce) {
    // Dense two-dimensional scan of the minimand as an independent oracle.
    const double pi = 1.6, s = 0.4, t = 0.2;
    const double q0 = phi_map(kT2, pi, s);
    double best = kInf;
    const int n = 800;
    for (int a = 0; a <= n; ++a) {
        const double p = (1.0 - pi / 2.0) * a / n;
        for (int b = 0; b <= n; ++b) {
            const double beta = t + (1.0 - t) * b / n;
            const double q = q0 / (1.0 - p);
            if (q > 1.0) continue;
            const double v = 0.5 * binomial_rate(1.0 - p, beta) + beta * binomial_rate(q, t / beta);
            best = std::min(best, v);
        }
    }
    const auto r = v1(kT2, pi, s, t);
    EXPECT_LE(r.value, best + 1e-9);
    EXPECT_GE(r.value, best - 1e-3);
}

TEST(VClosure, LemmaCasesOnCoarseLattice) {
    const std::size_t n = 32;
    const auto g1 = build_v1_grid(kT2, 1.6, n);
    const auto v = v_closure(g1);
    for (std::size_t j = 1; j <= n; ++j) EXPECT_EQ(v.at(0, j), kInf);
    EXPECT_EQ(v.at(0, 0), 0.0);
    // The lattice point nearest to rho* = 0.75 is exactly 24/32.
    for (std::size_t i = 1; i <= n; ++i) EXPECT_LE(v.at(i, 24), 0.05) << i;
    EXPECT_GT(v.lookup(0.70, 0.05), 0.0);
    // Closure is below every finite composition.
    const auto v3 = v_compose(g1, 3);
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= n; ++j) EXPECT_LE(v.at(i, j), v3.at(i, j) + 1e-12);
}

TEST(VClosure, WorkerCountDoesNotChangeGrid) {
    const auto a = build_v1_grid(kT2, 1.4, 16, 1.0 / 128, 1);
    const auto b = build_v1_grid(kT2, 1.4, 16, 1.0 / 128, 3);
    EXPECT_EQ(a.value, b.value);
}

TEST(MinPlus, SmallMatrixOracle) {
    RateGrid a;
    a.n = 1;
    a.value = {0.0, 2.0, 1.0, kInf};
    const auto c = min_plus(a, a);
    EXPECT_EQ(c.value, (std::vector<double>{0.0, 2.0, 1.0, 3.0}));
    const auto d = v_closure(a);
    EXPECT_EQ(d.value, (std::vector<double>{0.0, 2.0, 1.0, 3.0}));
}

TEST(GaltonWatson, MeansAndExtinction) {
    EXPECT_DOUBLE_EQ(ReproductionLaw::twice_poisson(1.5).mean(), 12.0);
    // Y' + 2 Y'' with Y' ~ Poisson(pi (1 + 3 eps)) and Y'' ~ Poisson(eps).
    const auto nu = ReproductionLaw::nu_star(0.8, 0.01);
    EXPECT_DOUBLE_EQ(nu.mean(), 0.8 * 1.03 + 0.02);
    for (double pi : {0.1, 0.5, 0.9, 0.99}) EXPECT_LT(ReproductionLaw::nu_star(pi).mean(), 1.0);
    double trunc_mean = 0.0;
    for (std::size_t k = 0; k < nu.pmf().size(); ++k) trunc_mean += double(k) * nu.pmf()[k];
    EXPECT_NEAR(trunc_mean, nu.mean(), 1e-9);
    EXPECT_NEAR(gw_extinction(nu), 1.0, 1e-9);
    EXPECT_THROW(ReproductionLaw::nu_star(1.2), invalid_argument);
    EXPECT_THROW(ReproductionLaw::custom({0.5, 0.4}), invalid_argument);
}

TEST(GaltonWatson, PoissonExtinctionFixedPoint) {
    // Poisson(2): q = exp(2(q - 1)), solved here by Newton's method.
    double q = 0.1;
    for (int k = 0; k < 100; ++k) q -= (std::exp(2 * (q - 1)) - q) / (2 * std::exp(2 * (q - 1)) - 1);
    EXPECT_NEAR(gw_extinction(ReproductionLaw::custom(poisson_pmf(2.0))), q, 1e-9);
}

TEST(GaltonWatson, SimulatedMeanGrowth) {
    const auto law = ReproductionLaw::custom({0.3, 0.3, 0.4});
    EXPECT_NEAR(law.mean(), 1.1, 1e-15);
    Stream rng(41);
    const int n = 100000;
    double z3 = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto path = gw_simulate(law, 3, rng);
        ASSERT_EQ(path.size(), 4U);
        z3 += double(path[3]);
    }
    EXPECT_NEAR(z3 / n, std::pow(1.1, 3), 0.03);
}

TEST(GaltonWatson, EngineMasterCountBelowNuStar) {
    // Sharp peak with l = m and pi = 0.8: the ECDF of N*_n sits above the nu*-GW ECDF.
    const std::size_t l = 100, m = 100, gens = 10, trials = 10000;
    GAConfig c;
    c.length = l;
    c.size = m;
    c.p_c = 0.0;
    c.p_m = mutation_for_survive(0.4, l);
    c.scheme = kT2;
    c.landscape = FitnessLandscape::sharp_peak(l);
    const Engine e(c);
    const auto law = ReproductionLaw::nu_star(0.8);
    const std::size_t kmax = 40;
    std::vector<std::vector<double>> cdf_ga(gens + 1, std::vector<double>(kmax, 0.0)), cdf_gw = cdf_ga;
    Stream rng(43);
    Population next(m, l);
    RankAssignment ranks;
    RandomBlock b;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        auto x = Population::master_over_zeros(m, l);
        const auto z = gw_simulate(law, gens, rng);
        for (std::size_t n = 1; n <= gens; ++n) {
            const auto fit = fitness_values(x, c.landscape);
            e.draw_block(rng, b);
            e.step(x, fit, b, next, ranks);
            std::swap(x, next);
            const std::size_t masters = count_at_least(x, c.landscape, c.landscape.max_value());
            const std::uint64_t zn = n < z.size() ? z[n] : z.back();
            for (std::size_t k = 0; k < kmax; ++k) {
                cdf_ga[n][k] += masters <= k ? 1.0 / trials : 0.0;
                cdf_gw[n][k] += zn <= k ? 1.0 / trials : 0.0;
            }
        }
    }
    for (std::size_t n = 1; n <= gens; ++n)
        for (std::size_t k = 0; k < kmax; ++k) EXPECT_GE(cdf_ga[n][k], cdf_gw[n][k] - 0.01) << n << " " << k;
}

TEST(PoissonTail, Examples) {
    EXPECT_NEAR(poisson_tail_bound(3.0, 3.0), std::exp(3.0), 1e-12);
    const double bound = poisson_tail_bound(2.0, 10.0);
    EXPECT_NEAR(bound, std::pow(2.0 * std::exp(1.0) / 10.0, 10.0), 1e-15);
    EXPECT_NEAR(bound, 2.2555e-3, 1e-7);
    EXPECT_LE(poisson_tail_exact(2.0, 10.0), bound);
    double prev = kInf;
    for (double t = 1.0; t <= 50.0; t += 0.25) {
        const double v = poisson_tail_bound(1.0, t);
        EXPECT_LT(v, prev);
        EXPECT_GE(v, poisson_tail_exact(1.0, t));
        prev = v;
    }
    EXPECT_THROW(poisson_tail_bound(2.0, 1.0), domain_error);
}

TEST(Dominance, Examples) {
    const auto b = binomial_pmf(10, 0.1);
    EXPECT_TRUE(dominance_check(b, b));
    EXPECT_TRUE(dominance_check(b, poisson_pmf(-10.0 * std::log(0.9))));
    EXPECT_FALSE(dominance_check(binomial_pmf(10, 0.5), poisson_pmf(0.5)));
}

TEST(Cramer, Examples) {
    EXPECT_NEAR(cramer_poisson(1.5, 2.0, 3.0), 0.0, 1e-15);
    EXPECT_NEAR(cramer_poisson(1.0, 1.0, 2.0), 2 * std::log(2.0) - 1, 1e-15);
    const auto d = cramer_dominance(20, 0.3, -1.0);
    EXPECT_TRUE(d.verified);
    EXPECT_EQ(d.points, 201U);
    EXPECT_THROW(cramer_poisson(1.0, 0.0, 1.0), domain_error);
}

TEST(Cramer, BinomialTransformAgainstClosedForm) {
    // For alpha = 1 the binomial transform is the relative entropy n I(p, x/n).
    for (double x : {0.0, 2.0, 6.0, 13.0, 20.0})
        EXPECT_NEAR(cramer_binomial_numeric(20, 0.3, 1.0, x), 20 * binomial_rate(0.3, x / 20), 1e-6) << x;
}

TEST(LogBinomial, Examples) {
    EXPECT_EQ(log_binomial_bound_check(50, 0).lhs, 0.0);
    EXPECT_TRUE(log_binomial_bound_check(100, 37).holds());
    for (std::size_t n = 1; n <= 200; ++n)
        for (std::size_t k = 0; k <= n; ++k) ASSERT_TRUE(log_binomial_bound_check(n, k).holds()) << n << " " << k;
}

TEST(Hoeffding, Examples) {
    EXPECT_NEAR(hoeffding_bound(100, 0.5, 40), std::exp(-2.0), 1e-15);
    EXPECT_NEAR(binomial_lower_tail(100, 0.5, 40), 0.0176, 1e-4);
    EXPECT_NEAR(hoeffding_bound(100, 0.5, 50 - 1e-9), 1.0, 1e-9);
    for (std::size_t n : {10, 100})
        for (double p : {0.2, 0.5, 0.8})
            for (double t = 0.0; t < double(n) * p; t += 0.5)
                EXPECT_GE(hoeffding_bound(n, p, t), binomial_lower_tail(n, p, t));
}

TEST(Advise, Examples) {
    const auto a = advise_parameters(100, kT2, 1.1);
    EXPECT_FALSE(a.feasible);
    EXPECT_NEAR(a.achieved_pi, 2 * std::pow(0.99, 100), 1e-12);
    const auto b = advise_parameters(100, SelectionScheme::tournament(4), 1.2, 0.5);
    ASSERT_TRUE(b.feasible);
    EXPECT_NEAR(b.p_m, 0.005, 1e-15);
    EXPECT_NEAR(b.p_c, 0.505, 1e-3);
    EXPECT_NEAR(pi_param(4.0, b.p_c, b.p_m, 100), 1.2, 1e-9);
    EXPECT_EQ(b.m, 462U);
    EXPECT_THROW(advise_parameters(100, kT2, 0.9), invalid_argument);
}
