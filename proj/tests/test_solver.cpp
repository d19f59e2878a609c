#include "refcycle/oracle.hpp"
#include "refcycle/solver.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace refcycle;
using namespace testing_support;

TEST(Solver, NonMonotoneFixtureIsFlaggedAndMatchesGeneratorSearch) {
    const GainTable g(PriceGrid({1, 2, 3, 4}, 2), {{0, 1, 0, 1}, {0, 0, 1, 1}, {1, 0, 0, 1}, {0, 0, 0, 0}});
    const auto r = solve(g);
    EXPECT_FALSE(r.reference_monotone);
    EXPECT_TRUE(r.assumption_violated);
    EXPECT_NEAR(r.opt, naive_best_generator(g), 1e-12);
    EXPECT_LE(bellman_residual(r, g), 1e-8);
}

TEST(Solver, ConstantTableGivesConstantCycle) {
    const GainTable g(integer_grid(3, 2), std::vector<std::vector<double>>(3, std::vector<double>(3, -0.75)));
    const auto r = solve(g);
    EXPECT_NEAR(r.opt, -0.75, 1e-12);
    EXPECT_EQ(r.generator.length(), 1u);
}

TEST(Solver, SinglePrice) {
    const GainTable g(integer_grid(1, 3), {{4.0}});
    const auto r = solve(g);
    EXPECT_EQ(r.opt, 4.0);
    EXPECT_EQ(r.cycle, PriceCycle({0}));
    EXPECT_EQ(r.bias, std::vector<double>{0.0});
}

TEST(Solver, GeneratorObjectiveMatchesExpansion) {
    std::mt19937_64 rng(7);
    const GainTable g = random_any(rng, 4, 3);
    for (const auto& gen : all_generators(4)) {
        const GeneratorCycle c(gen);
        EXPECT_NEAR(generator_objective(c, g), cycle_objective(expand(c, 3), g), 1e-12);
    }
}

TEST(Solver, OptimalAmongGeneratorsOnAnyTable) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 150; ++i) {
        const GainTable g = random_any(rng, 1 + i % 5, 1 + i % 3);
        const auto r = solve(g);
        EXPECT_NEAR(r.opt, naive_best_generator(g), 1e-9) << i;
        EXPECT_NEAR(generator_objective(r.generator, g), r.opt, 1e-12);
        EXPECT_EQ(r.cycle, expand(r.generator, g.memory()));
        EXPECT_LE(bellman_residual(r, g), 1e-8) << i;
        EXPECT_EQ(r.bias.front(), 0.0);
    }
}

TEST(Solver, MatchesFullStateOracleOnMonotoneTables) {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 240; ++i) {
        const std::size_t n = 2 + i % 3;
        const std::size_t m = 1 + (i / 3) % 3;
        const GainTable g = random_monotone(rng, n, m, i % 4 == 0);
        const auto r = solve(g);
        EXPECT_TRUE(r.reference_monotone);
        EXPECT_FALSE(r.assumption_violated);
        EXPECT_NEAR(r.opt, oracle::max_mean_cycle(g).value, 1e-9) << i;
    }
}

TEST(Solver, ShiftInvariance) {
    std::mt19937_64 rng(47);
    for (int i = 0; i < 50; ++i) {
        const GainTable g = random_monotone(rng, 4, 2);
        const auto a = solve(g);
        const auto b = solve(g.shifted(3.25));
        EXPECT_NEAR(b.opt, a.opt + 3.25, 1e-9);
    }
}

TEST(Solver, BellmanEquationsHoldWithEquality) {
    std::mt19937_64 rng(53);
    for (int i = 0; i < 100; ++i) {
        const GainTable g = random_monotone(rng, 2 + i % 4, 1 + i % 3);
        const auto r = solve(g);
        for (PriceIndex p = 0; p < g.size(); ++p) EXPECT_NEAR(bellman_rhs(p, r.opt, r.bias, g), r.bias[p], 1e-8);
        // The chosen generator attains the maximum in every step.
        for (std::size_t t = 0; t < r.generator.length(); ++t) {
            const PriceIndex prev = r.generator.previous(t);
            const PriceIndex cur = r.generator[t];
            const double k = static_cast<double>(hold_length(prev, cur, g.memory()));
            EXPECT_NEAR((g(prev, cur) - r.opt) * k + r.bias[cur], r.bias[prev], 1e-8);
        }
    }
}

TEST(Solver, NonMonotoneFixtureGeneratorValue) {
    const GainTable g(PriceGrid({1, 2, 3, 4}, 2), {{0, 1, 0, 1}, {0, 0, 1, 1}, {1, 0, 0, 1}, {0, 0, 0, 0}});
    EXPECT_NEAR(generator_objective(GeneratorCycle({0, 3}), g), 2.0 / 3.0, 1e-15);
    EXPECT_EQ(generator_objective(GeneratorCycle({2}), g), 0.0);
}

TEST(Solver, ResidualDetectsPerturbedOptimum) {
    std::mt19937_64 rng(59);
    const GainTable g = random_monotone(rng, 4, 2);
    auto r = solve(g);
    r.opt += 0.1;
    EXPECT_GE(bellman_residual(r, g), 0.1 - 1e-12);
}

TEST(Solver, TwoPriceTightInstance) {
    const GainTable g(PriceGrid({1, 2}, 2), {{0.0, 0.5}, {2.0, 0.5}});
    const auto r = solve(g);
    EXPECT_NEAR(r.opt, 1.0, 1e-12);
    EXPECT_EQ(r.generator, GeneratorCycle({0, 1}));
    EXPECT_EQ(r.cycle, PriceCycle({0, 1, 1}));
    SolveResult hand = r;
    hand.opt = 1.0;
    hand.bias = {0.0, 1.0};
    EXPECT_NEAR(bellman_residual(hand, g), 0.0, 1e-15);
}
