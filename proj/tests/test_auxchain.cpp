#include <gtest/gtest.h>

#include "qsga/auxchain.hpp"
#include "qsga/theory.hpp"

using namespace qsga;

namespace {

/// Law of the next state as an (m/2)-fold convolution of the per-pair law:
/// a pair contributes 0 after crossover, otherwise Binomial(2, eps).
std::vector<double> convolution_oracle(std::size_t m, double p_c, double eps) {
    const std::vector<double> pair{p_c + (1 - p_c) * (1 - eps) * (1 - eps), 2 * (1 - p_c) * eps * (1 - eps),
                                   (1 - p_c) * eps * eps};
    std::vector<double> law{1.0};
    for (std::size_t k = 0; k < m / 2; ++k) {
        std::vector<double> next(law.size() + 2, 0.0);
        for (std::size_t a = 0; a < law.size(); ++a)
            for (std::size_t b = 0; b < 3; ++b) next[a + b] += law[a] * pair[b];
        law.swap(next);
    }
    return law;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double tv = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) tv += 0.5 * std::abs(a[k] - b[k]);
    return tv;
}

GAConfig ga(std::size_t l, std::size_t m, double p_c, double p_m, SelectionScheme s) {
    GAConfig c;
    c.length = l;
    c.size = m;
    c.p_c = p_c;
    c.p_m = p_m;
    c.scheme = std::move(s);
    c.landscape = FitnessLandscape::one_max(l);
    return c;
}

} // namespace

TEST(AuxParams, Validation) {
    EXPECT_THROW(AuxParams(3, SelectionScheme::tournament(2), 0.0, 1.0), invalid_argument);
    EXPECT_THROW(AuxParams(4, SelectionScheme::tournament(2), 1.5, 1.0), invalid_argument);
    EXPECT_THROW(AuxParams(4, SelectionScheme::tournament(2), 0.0, 0.0), invalid_argument);
    const auto p = AuxParams::from_mutation(10, SelectionScheme::tournament(2), 0.1, 0.01, 50);
    EXPECT_NEAR(p.survive_prob(), std::pow(0.99, 50), 1e-14);
    EXPECT_NEAR(*p.pi(), 2 * 0.9 * std::pow(0.99, 50), 1e-14);
}

TEST(EpsM, Examples) {
    const AuxParams p(2, SelectionScheme::tournament(2), 0.0, 1.0);
    EXPECT_EQ(eps_m(p, 0), 0.0);
    EXPECT_DOUBLE_EQ(eps_m(p, 1), 0.75);
    const AuxParams q(10, SelectionScheme::linear_ranking(0.5, 1.5), 0.2, 0.6);
    EXPECT_NEAR(eps_m(q, 10), 0.6, 1e-15);
    EXPECT_THROW(eps_m(q, 11), invalid_argument);
}

TEST(TransitionProb, HandCaseIsExact) {
    const AuxParams p(2, SelectionScheme::tournament(2), 0.0, 1.0);
    EXPECT_EQ(transition_prob(p, 1, 2), 9.0 / 16.0);
    EXPECT_EQ(transition_prob(p, 1, 1), 6.0 / 16.0);
    EXPECT_EQ(transition_prob(p, 1, 0), 1.0 / 16.0);
}

TEST(TransitionProb, AbsorbingAndFullCrossover) {
    const AuxParams p(8, SelectionScheme::tournament(2), 0.3, 0.8);
    EXPECT_EQ(transition_prob(p, 0, 0), 1.0);
    for (std::size_t j = 1; j <= 8; ++j) EXPECT_EQ(transition_prob(p, 0, j), 0.0);
    const AuxParams all(8, SelectionScheme::tournament(2), 1.0, 0.8);
    for (std::size_t i = 0; i <= 8; ++i) EXPECT_NEAR(transition_prob(all, i, 0), 1.0, 1e-15);
}

TEST(TransitionProb, MatchesConvolutionOracle) {
    for (std::size_t m : {8, 64, 66, 200, 1000}) {
        for (const auto& s : {SelectionScheme::tournament(3), SelectionScheme::linear_ranking(0.2, 1.8)}) {
            const AuxParams p(m, s, 0.25, 0.7);
            for (std::size_t i : {std::size_t{1}, m / 3, m}) {
                const auto oracle = convolution_oracle(m, 0.25, eps_m(p, i));
                const auto row = transition_row(p, i);
                double sum = 0.0;
                for (std::size_t j = 0; j <= m; ++j) {
                    sum += row[j];
                    EXPECT_NEAR(row[j], oracle[j], 1e-12 + 1e-9 * oracle[j]) << "m=" << m << " i=" << i << " j=" << j;
                }
                EXPECT_NEAR(sum, 1.0, 1e-10);
            }
        }
    }
}

TEST(TransitionProb, MeanMatchesExpectedNext) {
    const AuxParams p(40, SelectionScheme::tournament(2), 0.1, 0.9);
    for (std::size_t i : {1, 10, 40}) {
        const auto row = transition_row(p, i);
        double mean = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) mean += double(j) * row[j];
        EXPECT_NEAR(mean, expected_next(p, i), 1e-10);
    }
}

TEST(SampleStep, HandCaseFrequency) {
    const AuxParams p(2, SelectionScheme::tournament(2), 0.0, 1.0);
    Stream rng(5);
    const int n = 1'000'000;
    int twos = 0;
    for (int k = 0; k < n; ++k) twos += sample_step(p, 1, rng) == 2;
    EXPECT_NEAR(twos / double(n), 9.0 / 16.0, 0.005);
}

TEST(SampleStep, LawMatchesTransitionRow) {
    Stream rng(6);
    const int n = 200000;
    for (std::size_t m : {8, 32}) {
        const AuxParams p(m, SelectionScheme::linear_ranking(0.4, 1.6), 0.2, 0.85);
        const std::size_t i = m / 4;
        std::vector<double> freq(m + 1, 0.0);
        for (int k = 0; k < n; ++k) freq[sample_step(p, i, rng)] += 1.0 / n;
        EXPECT_LT(total_variation(freq, transition_row(p, i)), 0.01);
    }
    const AuxParams p(4, SelectionScheme::tournament(2), 0.0, 1.0);
    for (int k = 0; k < 100; ++k) EXPECT_EQ(sample_step(p, 0, rng), 0U);
}

TEST(Psi, DefinitionAndEdgeCases) {
    const auto c = ga(5, 8, 0.4, 0.05, SelectionScheme::tournament(2));
    const Engine e(c);
    const SelectionTable table(c.scheme, c.size);
    Stream rng(7);
    for (int rep = 0; rep < 500; ++rep) {
        const auto b = e.draw_block(rng);
        const auto psi = psi_table(b, table);
        EXPECT_EQ(psi[0], 0U);
        for (std::size_t i = 0; i <= 8; ++i) {
            // Direct evaluation of the sum over members.
            std::size_t direct = 0;
            for (std::size_t j = 0; j < 8; ++j) {
                const bool top = table.index_from_uniform(b.s[j]) + i >= 9;
                direct += (top && b.v[j / 2] == 0 && b.mask_is_zero(j)) ? 1 : 0;
            }
            EXPECT_EQ(psi[i], direct);
            EXPECT_EQ(psi_from_block(b, table, i), direct);
            if (i > 0) EXPECT_GE(psi[i], psi[i - 1]);
        }
    }
    const Engine all(ga(5, 8, 1.0, 0.05, SelectionScheme::tournament(2)));
    const auto b = all.draw_block(rng);
    for (std::size_t i = 0; i <= 8; ++i) EXPECT_EQ(psi_from_block(b, table, i), 0U);
}

TEST(Psi, LawMatchesTransitionRow) {
    const auto c = ga(3, 8, 0.3, 0.08, SelectionScheme::tournament(2));
    const Engine e(c);
    const auto params = AuxParams::from_config(c);
    Stream rng(8);
    const int n = 200000;
    std::vector<std::vector<double>> freq(9, std::vector<double>(9, 0.0));
    for (int k = 0; k < n; ++k) {
        const auto psi = psi_table(e.draw_block(rng), params.table());
        for (std::size_t i = 0; i <= 8; ++i) freq[i][psi[i]] += 1.0 / n;
    }
    for (std::size_t i = 0; i <= 8; ++i) EXPECT_LT(total_variation(freq[i], transition_row(params, i)), 0.01) << i;
}

TEST(Psi, PathwiseLowerBound) {
    // N_{n+1} = Psi_n(N_n) started from N(X_t, lambda) stays below N(X_n, lambda).
    const auto c = ga(16, 16, 0.3, 0.02, SelectionScheme::tournament(2));
    const Engine e(c);
    const SelectionTable table(c.scheme, c.size);
    Stream rng(9);
    Population x(16, 16);
    auto fit = fitness_values(x, c.landscape);
    const auto levels = c.landscape.value_set();
    std::vector<std::size_t> n(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) n[k] = count_at_least(fit, levels[k]);
    Population next(16, 16);
    RankAssignment ranks;
    RandomBlock b;
    for (int step = 0; step < 3000; ++step) {
        e.draw_block(rng, b);
        e.step(x, fit, b, next, ranks);
        std::swap(x, next);
        fit = fitness_values(x, c.landscape);
        const auto psi = psi_table(b, table);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            n[k] = psi[n[k]];
            ASSERT_LE(n[k], count_at_least(fit, levels[k]));
            if (step % 500 == 0) n[k] = count_at_least(fit, levels[k]);
        }
    }
}

TEST(Hitting, AbsorbedStart) {
    const AuxParams p(10, SelectionScheme::tournament(2), 0.0, 0.5);
    Stream rng(1);
    const auto r = simulate_hitting(p, 0, HitTarget::absorption, 0.0, 100, rng);
    EXPECT_EQ(r.time, 0U);
    EXPECT_EQ(r.outcome, HitOutcome::absorbed);
}

TEST(Hitting, SubcriticalAbsorbsQuickly) {
    const AuxParams p(100, SelectionScheme::tournament(2), 0.0, 0.4); // pi = 0.8
    Stream rng(2);
    double total = 0.0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
        const auto r = simulate_hitting(p, 1, HitTarget::absorption, 0.0, 100000, rng);
        ASSERT_EQ(r.outcome, HitOutcome::absorbed);
        total += double(r.time);
    }
    EXPECT_LE(total / n, 50.0);
}

TEST(Hitting, SupercriticalPersistsAboveTenPercent) {
    const AuxParams p(200, SelectionScheme::tournament(2), 0.0, 0.8); // pi = 1.6
    const auto start = static_cast<std::size_t>(std::floor(rho_star(p.scheme(), 1.6) * 200));
    Stream rng(3);
    for (int k = 0; k < 100; ++k) {
        const auto r = simulate_hitting(p, start, HitTarget::below, 0.1, 100000, rng);
        ASSERT_EQ(r.outcome, HitOutcome::timeout);
    }
}

TEST(Hitting, AboveTarget) {
    const AuxParams p(50, SelectionScheme::tournament(2), 0.0, 0.8);
    Stream rng(4);
    const auto r = simulate_hitting(p, 40, HitTarget::above, 0.5, 100, rng);
    EXPECT_EQ(r.outcome, HitOutcome::above);
    EXPECT_EQ(r.time, 0U);
}

TEST(QuasiStationary, MeanNearFixedPoint) {
    const AuxParams p(300, SelectionScheme::tournament(2), 0.1, 0.8 / 0.9); // pi = 1.6
    Stream rng(10);
    const auto q = quasi_stationary(p, 225, default_burn_in(300), 20000, rng);
    EXPECT_FALSE(q.absorbed);
    EXPECT_NEAR(q.mean_fraction, 0.75, 0.03);
    EXPECT_EQ(default_burn_in(1000), 70U);
}

TEST(GeometricGrowth, SupercriticalFrequency) {
    const AuxParams p(1000, SelectionScheme::tournament(2), 0.0, 0.8); // pi = 1.6
    Stream rng(11);
    EXPECT_GE(geometric_growth_frequency(p, 0.05, 20000, rng), 0.1);
    const AuxParams sub(1000, SelectionScheme::tournament(2), 0.0, 0.4);
    EXPECT_LT(geometric_growth_frequency(sub, 0.05, 20000, rng), 0.01);
}
