#include <gtest/gtest.h>

#include <algorithm>
#include <bitset>

#include "qsga/core.hpp"
#include "qsga/random.hpp"

using namespace qsga;

namespace {

// Fitness of every string of length l, computed straight from the string.
double one_max_of(const std::string& s) { return static_cast<double>(std::count(s.begin(), s.end(), '1')); }

std::string bits_of(std::size_t code, std::size_t l) {
    std::string s(l, '0');
    for (std::size_t j = 0; j < l; ++j)
        if ((code >> j) & 1U) s[j] = '1';
    return s;
}

} // namespace

TEST(Chromosome, RoundTripsThroughStrings) {
    for (std::string s : std::vector<std::string>{"0", "1", "0101", "1111111111", std::string(130, '1'), std::string(65, '0') + "1"}) {
        const auto c = Chromosome::from_string(s);
        EXPECT_EQ(c.to_string(), s);
        EXPECT_EQ(c.length(), s.size());
    }
    EXPECT_THROW(Chromosome::from_string("01x"), invalid_argument);
}

TEST(Chromosome, CodeMatchesPositionOrder) {
    for (std::size_t code = 0; code < 32; ++code) {
        const auto c = Chromosome::from_code(code, 5);
        EXPECT_EQ(c.to_string(), bits_of(code, 5));
        EXPECT_EQ(c.view().code(), code);
    }
}

TEST(Chromosome, CountsAndPredicates) {
    const auto c = Chromosome::from_string("1110100");
    EXPECT_EQ(c.view().ones(), 4U);
    EXPECT_EQ(c.view().leading_ones(), 3U);
    EXPECT_FALSE(c.view().all_ones());
    EXPECT_TRUE(Chromosome::ones(70).view().all_ones());
    EXPECT_EQ(Chromosome::ones(70).view().leading_ones(), 70U);
    EXPECT_EQ(c.complement().to_string(), "0001011");
    // The padding bits of the last word stay clear after complementing.
    EXPECT_EQ(Chromosome(67).complement().view().ones(), 67U);
}

TEST(Hamming, Examples) {
    const auto u = Chromosome::from_string("0000000");
    EXPECT_EQ(hamming(u, u), 0U);
    EXPECT_EQ(hamming(u, Chromosome::from_string("0101000")), 2U);
    const auto w = Chromosome::from_string(std::string(100, '0') + "1011");
    EXPECT_EQ(hamming(w, w.complement()), 104U);
    EXPECT_THROW(hamming(u, Chromosome(8)), invalid_argument);
}

TEST(Population, Construction) {
    const auto x = Population::master_over_zeros(4, 3);
    EXPECT_EQ(x[0].to_string(), "111");
    for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(x[i].to_string(), "000");
    const auto y = Population::from_strings({"101", "010"});
    EXPECT_EQ(y.size(), 2U);
    EXPECT_EQ(y.member(1).to_string(), "010");
    EXPECT_THROW(Population::from_strings({"101", "01"}), invalid_argument);
}

TEST(Landscape, SharpPeakAndOneMax) {
    const auto sp = FitnessLandscape::sharp_peak(4);
    EXPECT_EQ(sp(Chromosome::from_string("1111")), 2.0);
    EXPECT_EQ(sp(Chromosome::from_string("1101")), 1.0);
    EXPECT_EQ(sp.value_set(), (std::vector<double>{1.0, 2.0}));
    const auto om = FitnessLandscape::one_max(6);
    for (std::size_t c = 0; c < 64; ++c) EXPECT_EQ(om(Chromosome::from_code(c, 6)), one_max_of(bits_of(c, 6)));
    EXPECT_EQ(om.max_value(), 6.0);
}

TEST(Landscape, StaircaseAndCustom) {
    const auto st = FitnessLandscape::staircase(3, {0.0, 1.0, 1.0, 5.0});
    EXPECT_EQ(st(Chromosome::from_string("110")), 1.0);
    EXPECT_EQ(st(Chromosome::from_string("011")), 0.0);
    EXPECT_EQ(st(Chromosome::from_string("111")), 5.0);
    EXPECT_THROW(FitnessLandscape::staircase(3, {0.0, 1.0}), invalid_argument);
    const auto cu = FitnessLandscape::custom(2, {{"11", 3.0}, {"01", 2.0}}, 1.0);
    EXPECT_EQ(cu(Chromosome::from_string("11")), 3.0);
    EXPECT_EQ(cu(Chromosome::from_string("01")), 2.0);
    EXPECT_EQ(cu(Chromosome::from_string("10")), 1.0);
    EXPECT_EQ(cu.value_set(), (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_THROW(FitnessLandscape::custom(2, {{"111", 1.0}}, 0.0), invalid_argument);
}

TEST(CountAtLeast, Examples) {
    const auto sp = FitnessLandscape::sharp_peak(5);
    const auto x = Population::master_over_zeros(6, 5);
    EXPECT_EQ(count_at_least(x, sp, 0.5), 6U);
    EXPECT_EQ(count_at_least(x, sp, 2.0), 1U);
}

TEST(CountAtLeast, MatchesPerMemberLoop) {
    Stream rng(11);
    const auto om = FitnessLandscape::one_max(4);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::string> members;
        for (int i = 0; i < 4; ++i) members.push_back(bits_of(rng.uniform_int(0, 15), 4));
        const auto x = Population::from_strings(members);
        std::size_t expected = 0;
        for (const auto& s : members) expected += one_max_of(s) >= 2.0 ? 1 : 0;
        EXPECT_EQ(count_at_least(x, om, 2.0), expected);
    }
}

TEST(LevelFitness, Examples) {
    const std::vector<double> f{1.0, 1.0, 2.0, 3.0};
    EXPECT_EQ(level_fitness(f, 1), 3.0);
    EXPECT_EQ(level_fitness(f, 4), 1.0);
    EXPECT_EQ(level_fitness(f, 2), 2.0);
    EXPECT_THROW(level_fitness(f, 0), invalid_argument);
    EXPECT_THROW(level_fitness(f, 5), invalid_argument);
}

TEST(DeltaDistance, SharpPeakIsLength) {
    for (std::size_t l : {1, 4, 9}) EXPECT_EQ(delta_distance(FitnessLandscape::sharp_peak(l), 1.0, 2.0), l);
}

TEST(DeltaDistance, OneMaxMatchesExhaustivePairs) {
    // Oracle: for each u in L(k), the minimum Hamming distance to any v in L(k+1), by scanning all pairs.
    const std::size_t l = 6;
    const auto om = FitnessLandscape::one_max(l);
    for (std::size_t k = 0; k < l; ++k) {
        std::size_t worst = 0;
        for (std::size_t u = 0; u < 64; ++u) {
            if (std::bitset<6>(u).count() < k) continue;
            std::size_t best = l + 1;
            for (std::size_t v = 0; v < 64; ++v)
                if (std::bitset<6>(v).count() >= k + 1) best = std::min<std::size_t>(best, std::bitset<6>(u ^ v).count());
            worst = std::max(worst, best);
        }
        EXPECT_EQ(delta_distance(om, double(k), double(k + 1)), worst);
        EXPECT_EQ(worst, 1U);
    }
}

TEST(DeltaDistance, LevelsBelowMinimum) {
    EXPECT_EQ(delta_distance(FitnessLandscape::sharp_peak(5), -1.0, 0.5), 0U);
    EXPECT_THROW(delta_distance(FitnessLandscape::sharp_peak(21), 1.0, 2.0), capacity_error);
    EXPECT_THROW(delta_distance(FitnessLandscape::sharp_peak(4), 2.0, 3.0), domain_error);
}

TEST(Random, DerivedSeedsDifferByTrialAndTag) {
    EXPECT_NE(derive_seed(1, 0, "a"), derive_seed(1, 1, "a"));
    EXPECT_NE(derive_seed(1, 0, "a"), derive_seed(1, 0, "b"));
    EXPECT_EQ(derive_seed(7, 3, "engine"), derive_seed(7, 3, "engine"));
}

TEST(Random, GeometricGapHasGeometricMean) {
    Stream rng(5);
    const double p = 0.2;
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(geometric_gap(rng, std::log1p(-p)));
    EXPECT_NEAR(sum / n, (1.0 - p) / p, 0.05);
}

TEST(Random, SplitMixBelowIsUniform) {
    SplitMix g(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[g.below(7)];
    for (int c : counts) EXPECT_NEAR(c / 70000.0, 1.0 / 7.0, 0.006);
}
