#include "refcycle/errors.hpp"
#include "refcycle/oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace refcycle;
using namespace testing_support;

namespace {

GainTable nonmonotone4() {
    return GainTable(PriceGrid({1, 2, 3, 4}, 2), {{0, 1, 0, 1}, {0, 0, 1, 1}, {1, 0, 0, 1}, {0, 0, 0, 0}});
}

}  // namespace

TEST(StateGraph, EncodesWindowsAndReferences) {
    const GainTable g = nonmonotone4();
    const oracle::StateGraph graph(g);
    EXPECT_EQ(graph.node_count(), 16u);
    for (oracle::StateId s = 0; s < graph.node_count(); ++s) {
        const auto window = graph.decode(s);
        ASSERT_EQ(window.size(), 2u);
        EXPECT_EQ(graph.encode(window), s);
        EXPECT_EQ(graph.reference(s), std::min(window[0], window[1]));
        for (PriceIndex p = 0; p < 4; ++p) {
            const auto next = graph.decode(graph.successor(s, p));
            EXPECT_EQ(next[0], window[1]);
            EXPECT_EQ(next[1], p);
            EXPECT_EQ(graph.weight(s, p), g(std::min(window[0], window[1]), p));
        }
    }
    EXPECT_EQ(graph.decode(graph.start_state()), (std::vector<PriceIndex>{3, 3}));
}

TEST(StateGraph, BudgetGuard) {
    const GainTable g(integer_grid(10, 7), std::vector<std::vector<double>>(10, std::vector<double>(10, 0.0)));
    EXPECT_THROW(oracle::StateGraph(g, 1'000'000), BudgetExceeded);
    EXPECT_THROW(oracle::max_mean_cycle(g), BudgetExceeded);
}

TEST(MaxMeanCycle, NonMonotoneFixtureValueIsOne) {
    const auto mc = oracle::max_mean_cycle(nonmonotone4());
    EXPECT_NEAR(mc.value, 1.0, 1e-12);
    EXPECT_NEAR(cycle_objective(mc.witness, nonmonotone4()), 1.0, 1e-12);
    EXPECT_EQ(cycle_objective(PriceCycle({3, 0, 3, 1, 3, 2}), nonmonotone4()), 1.0);
}

TEST(MaxMeanCycle, ConstantTable) {
    const GainTable g(integer_grid(3, 2), std::vector<std::vector<double>>(3, std::vector<double>(3, 2.5)));
    EXPECT_NEAR(oracle::max_mean_cycle(g).value, 2.5, 1e-12);
}

TEST(MaxMeanCycle, AgreesWithValueIteration) {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 60; ++i) {
        const std::size_t n = 2 + i % 3;
        const GainTable g = random_any(rng, n, 1 + (i / 3) % 3);
        const auto mc = oracle::max_mean_cycle(g);
        EXPECT_NEAR(mc.value, naive_state_optimum(g), 1e-8) << "instance " << i;
        EXPECT_NEAR(cycle_objective(mc.witness, g), mc.value, 1e-9);
    }
}

TEST(MaxMeanCycle, AgreesWithCycleEnumeration) {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 40; ++i) {
        const GainTable g = random_monotone(rng, 3, 2);
        // Simple cycles in the 9-state graph have length at most 9.
        EXPECT_NEAR(oracle::max_mean_cycle(g).value, oracle::exhaustive_cycles(g, 9).value, 1e-9);
    }
}

TEST(ExhaustiveGenerators, MatchesBruteForce) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 40; ++i) {
        const GainTable g = random_any(rng, 2 + i % 4, 1 + i % 3);
        const auto gen = oracle::exhaustive_generators(g);
        EXPECT_NEAR(gen.value, naive_best_generator(g), 1e-12);
        EXPECT_NEAR(cycle_objective(expand(gen.best, g.memory()), g), gen.value, 1e-12);
    }
}

TEST(ExhaustiveGenerators, NonMonotoneFixtureBestIsTheAscendingTriple) {
    // The fixture lets 12233 average exactly 1 as well.
    const auto gen = oracle::exhaustive_generators(nonmonotone4());
    EXPECT_EQ(gen.value, 1.0);
    EXPECT_EQ(gen.best, GeneratorCycle({0, 1, 2}));
}

TEST(ExhaustiveCycles, ListsEveryOptimumCanonically) {
    const auto res = oracle::exhaustive_cycles(nonmonotone4(), 6);
    EXPECT_EQ(res.value, 1.0);
    const PriceCycle target = PriceCycle({3, 0, 3, 1, 3, 2}).canonical();
    EXPECT_NE(std::find(res.optimal.begin(), res.optimal.end(), target), res.optimal.end());
    for (const auto& c : res.optimal) {
        EXPECT_EQ(c, c.canonical());
        EXPECT_EQ(cycle_objective(c, nonmonotone4()), 1.0);
    }
}

TEST(LUp1DownOptimality, MonotoneTablesHaveAnOptimalLUp1DownCycle) {
    std::mt19937_64 rng(37);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + i % 3;
        const std::size_t m = 1 + (i / 3) % 3;
        const GainTable g = random_monotone(rng, n, m, i % 2 == 0);
        EXPECT_NEAR(oracle::max_mean_cycle(g).value, oracle::exhaustive_generators(g).value, 1e-9) << i;
    }
}

TEST(LUp1DownOptimality, NonMonotoneTablesCanOnlyDoBetter) {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 100; ++i) {
        const GainTable g = random_any(rng, 2 + i % 3, 1 + i % 3);
        EXPECT_GE(oracle::max_mean_cycle(g).value, oracle::exhaustive_generators(g).value - 1e-9);
    }
}

TEST(Simulate, WitnessAverageConvergesToValue) {
    std::mt19937_64 rng(43);
    const GainTable g = random_monotone(rng, 4, 3);
    const auto mc = oracle::max_mean_cycle(g);
    const auto traj = oracle::simulate(mc.witness, g, 60000);
    ASSERT_EQ(traj.size(), 60000u);
    EXPECT_EQ(traj.front().state, (std::vector<PriceIndex>{3, 3, 3}));
    EXPECT_NEAR(oracle::average_gain(traj), mc.value, 1e-3);
    for (const auto& step : traj) {
        EXPECT_EQ(step.reference, *std::min_element(step.state.begin(), step.state.end()));
        EXPECT_EQ(step.gain, g(step.reference, step.price));
    }
}

TEST(Simulate, PolicyDrivesTransitions) {
    const GainTable g = nonmonotone4();
    const oracle::Policy low = [](std::span<const PriceIndex>) { return PriceIndex{0}; };
    const auto traj = oracle::simulate(low, g, 5);
    EXPECT_EQ(traj[0].reference, 3u);
    EXPECT_EQ(traj[0].gain, 0.0);   // g(4,1)
    EXPECT_EQ(traj[2].reference, 0u);
    EXPECT_EQ(oracle::average_gain(traj), 0.0);
}

TEST(Simulate, NonMonotoneFixtureReplayAverages) {
    const auto traj = oracle::simulate(PriceCycle({3, 0, 3, 1, 3, 2}), nonmonotone4(), 600);
    EXPECT_NEAR(oracle::average_gain(traj), 1.0, 0.01);
    const auto flat = oracle::simulate(PriceCycle({1}), nonmonotone4(), 10);
    for (const auto& s : flat) EXPECT_EQ(s.price, 1u);
}

TEST(Simulate, LUp1DownReferenceIsPreviousGeneratorValue) {
    const GainTable g(integer_grid(4, 3), std::vector<std::vector<double>>(4, std::vector<double>(4, 0.0)));
    const GeneratorCycle gen({0, 3, 1, 2});
    const PriceCycle c = expand(gen, 3);
    const auto traj = oracle::simulate(c, g, 10 * c.length());
    for (std::size_t t = 3 * c.length(); t < traj.size(); ++t)
        EXPECT_EQ(traj[t].reference, reference_at(c, 3, t % c.length()));
}

TEST(TightExample, TwoPriceOptimumIsUniqueAmongShortCycles) {
    const GainTable g(PriceGrid({1, 2}, 2), {{0.0, 0.5}, {2.0, 0.5}});
    const auto res = oracle::exhaustive_cycles(g, 6);
    EXPECT_NEAR(res.value, 1.0, 1e-12);
    ASSERT_EQ(res.optimal.size(), 1u);
    EXPECT_EQ(res.optimal[0], PriceCycle({0, 1, 1}));
    const auto gen = oracle::exhaustive_generators(g);
    EXPECT_EQ(gen.best, GeneratorCycle({0, 1}));
}
