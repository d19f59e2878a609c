#include "refcycle/errors.hpp"
#include "refcycle/solver.hpp"
#include "refcycle/tightness.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace refcycle;
using namespace testing_support;

TEST(Tightness, WorkedTwoPriceInstance) {
    // P = {1,2}, l = 2, target (1,2), h = (0,1), C = 1.
    const PriceGrid grid({1, 2}, 2);
    const GainTable g = tightness::assemble(GeneratorCycle({0, 1}), grid, {0.0, 1.0}, 1.0, -10.0);
    EXPECT_EQ(g(0, 0), 0.0);
    EXPECT_EQ(g(1, 0), 2.0);
    EXPECT_EQ(g(0, 1), 0.5);
    EXPECT_EQ(g(1, 1), 0.5);
    EXPECT_TRUE(g.reference_monotone());
    EXPECT_EQ(cycle_objective(PriceCycle({0, 1, 1}), g), 1.0);
}

TEST(Tightness, EqualBiasCreatesTies) {
    const PriceGrid grid({1, 2}, 2);
    tightness::TightnessInstance inst{
        tightness::assemble(GeneratorCycle({0, 1}), grid, {0.0, 0.0}, 1.0, -10.0), GeneratorCycle({0, 1}),
        {0.0, 0.0}, 1.0, -10.0};
    EXPECT_FALSE(tightness::verify_uniqueness(inst).unique);
}

TEST(Tightness, BuildValidatesParameters) {
    const PriceGrid grid = integer_grid(3, 2);
    tightness::BuildParams decreasing;
    decreasing.bias = std::vector<double>{1.0, 0.0};
    EXPECT_THROW(tightness::build(GeneratorCycle({0, 1}), grid, decreasing), ValidationError);
    tightness::BuildParams low;
    low.level = 0.25;
    low.bias = std::vector<double>{0.0, 1.0};
    EXPECT_THROW(tightness::build(GeneratorCycle({0, 1}), grid, low), ValidationError);
}

TEST(Tightness, SlackVanishesOnGeneratorMoves) {
    const PriceGrid grid = integer_grid(4, 3);
    const GeneratorCycle target({0, 3, 1, 2});
    const auto inst = tightness::build(target, grid);
    const auto slack = tightness::bellman_slack(inst);
    for (std::size_t t = 0; t < target.length(); ++t)
        EXPECT_NEAR(slack[target.previous(t)][target[t]], 0.0, 1e-12);
    for (PriceIndex r : target.values())
        for (PriceIndex p : target.values()) EXPECT_FALSE(std::isnan(slack[r][p]));
}

TEST(Tightness, EveryGeneratorIsUniquelyOptimalUpToFourPrices) {
    for (std::size_t n = 1; n <= 4; ++n)
        for (std::size_t m = 1; m <= 3; ++m)
            for (const auto& gen : all_generators(n)) {
                const GeneratorCycle target(gen);
                const auto inst = tightness::build(target, integer_grid(n, m));
                EXPECT_TRUE(inst.gains.reference_monotone());
                const auto check = tightness::verify_uniqueness(inst);
                EXPECT_TRUE(check.unique) << "n=" << n << " l=" << m;
                const auto r = solve(inst.gains);
                EXPECT_NEAR(r.opt, inst.level, 1e-9);
                EXPECT_EQ(r.generator.canonical(), target.canonical());
            }
}

TEST(Tightness, RandomIncreasingBiases) {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> step(0.1, 3.0);
    for (int i = 0; i < 60; ++i) {
        const std::size_t n = 3 + i % 3;
        const std::size_t m = 1 + i % 3;
        auto gens = all_generators(n);
        const GeneratorCycle target(gens[rng() % gens.size()]);
        tightness::BuildParams params;
        std::vector<double> h{0.0};
        for (std::size_t t = 1; t < target.length(); ++t) h.push_back(h.back() + step(rng));
        params.bias = h;
        const auto inst = tightness::build(target, integer_grid(n, m), params);
        EXPECT_TRUE(tightness::verify_uniqueness(inst).unique) << i;
    }
}
