#pragma once

// Test helpers: seeded instance generators and naive reference computations
// that do not share code with the library.

#include "refcycle/allocator.hpp"
#include "refcycle/core.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace testing_support {

using refcycle::GainTable;
using refcycle::PriceGrid;
using refcycle::PriceIndex;

inline PriceGrid integer_grid(std::size_t n, std::size_t memory) {
    std::vector<refcycle::Price> prices;
    for (std::size_t i = 1; i <= n; ++i) prices.emplace_back(static_cast<std::int64_t>(i));
    return PriceGrid(prices, memory);
}

/// Each column is a sorted draw, so the table is weakly increasing in the reference.
/// With `ties` the entries come from a small integer range, which produces many ties.
inline GainTable random_monotone(std::mt19937_64& rng, std::size_t n, std::size_t memory, bool ties = false) {
    std::uniform_real_distribution<double> real(-1.0, 2.0);
    std::uniform_int_distribution<int> small(-2, 3);
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (std::size_t p = 0; p < n; ++p) {
        std::vector<double> col(n);
        for (auto& v : col) v = ties ? small(rng) : real(rng);
        std::sort(col.begin(), col.end());
        for (std::size_t r = 0; r < n; ++r) rows[r][p] = col[r];
    }
    return GainTable(integer_grid(n, memory), rows);
}

inline GainTable random_any(std::mt19937_64& rng, std::size_t n, std::size_t memory) {
    std::uniform_real_distribution<double> real(-1.0, 2.0);
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (auto& row : rows)
        for (auto& v : row) v = real(rng);
    return GainTable(integer_grid(n, memory), rows);
}

inline std::vector<PriceIndex> random_tokens(std::mt19937_64& rng, std::size_t n, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<PriceIndex> tok(0, n - 1);
    std::vector<PriceIndex> out(len(rng));
    for (auto& t : out) t = tok(rng);
    return out;
}

/// Cycle average computed by materializing every window explicitly.
inline double naive_objective(const std::vector<PriceIndex>& c, const GainTable& g) {
    const std::size_t n = c.size();
    const std::size_t m = g.memory();
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<PriceIndex> window;
        for (std::size_t k = 1; k <= m; ++k) window.push_back(c[(t + n * m - k) % n]);
        total += g(*std::min_element(window.begin(), window.end()), c[t]);
    }
    return total / static_cast<double>(n);
}

/// Expansion written directly from the definition: k = l after an increase, else 1.
inline std::vector<PriceIndex> naive_expand(const std::vector<PriceIndex>& gen, std::size_t memory) {
    if (gen.size() == 1) return gen;
    std::vector<PriceIndex> out;
    for (std::size_t t = 0; t < gen.size(); ++t) {
        const PriceIndex prev = gen[(t + gen.size() - 1) % gen.size()];
        out.insert(out.end(), gen[t] > prev ? memory : 1, gen[t]);
    }
    return out;
}

/// All generator cycles (distinct values, starting at their minimum) over n prices.
inline std::vector<std::vector<PriceIndex>> all_generators(std::size_t n) {
    std::vector<std::vector<PriceIndex>> out;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<PriceIndex> set;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) set.push_back(i);
        std::vector<PriceIndex> rest(set.begin() + 1, set.end());
        do {
            std::vector<PriceIndex> gen{set.front()};
            gen.insert(gen.end(), rest.begin(), rest.end());
            out.push_back(gen);
        } while (std::next_permutation(rest.begin(), rest.end()));
    }
    return out;
}

/// Best generator by brute force over all_generators.
inline double naive_best_generator(const GainTable& g) {
    double best = -1e300;
    for (const auto& gen : all_generators(g.size()))
        best = std::max(best, naive_objective(naive_expand(gen, g.memory()), g));
    return best;
}

/// Full state-graph optimum by value iteration with the aperiodicity transform
/// V_k(s) = max_p [w(s,p) + V_{k-1}(s')] / 2 + V_{k-1}(s) / 2. The graph is
/// communicating, so min and max of V_k - V_{k-1} bracket half the optimum.
inline double naive_state_optimum(const GainTable& g, std::size_t iterations = 200000) {
    const std::size_t n = g.size();
    const std::size_t m = g.memory();
    std::size_t states = 1;
    for (std::size_t i = 0; i < m; ++i) states *= n;
    const std::size_t stride = states / n;
    std::vector<PriceIndex> ref(states);
    for (std::size_t s = 0; s < states; ++s) {
        std::size_t x = s;
        PriceIndex lo = n;
        for (std::size_t i = 0; i < m; ++i, x /= n) lo = std::min<PriceIndex>(lo, x % n);
        ref[s] = lo;
    }
    std::vector<double> v(states, 0.0), next(states);
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < iterations; ++k) {
        for (std::size_t s = 0; s < states; ++s) {
            double best = -1e300;
            for (PriceIndex p = 0; p < n; ++p) best = std::max(best, g(ref[s], p) + v[(s % stride) * n + p]);
            next[s] = 0.5 * best + 0.5 * v[s];
        }
        lo = 1e300;
        hi = -1e300;
        for (std::size_t s = 0; s < states; ++s) {
            lo = std::min(lo, next[s] - v[s]);
            hi = std::max(hi, next[s] - v[s]);
        }
        std::swap(v, next);
        if (hi - lo < 1e-12) break;
    }
    return lo + hi;
}

/// Random population with beta^T x >= 0 for everyone (non-negative features and weights).
struct Population {
    refcycle::alloc::AllocationModel model;
    std::vector<refcycle::alloc::CustomerRecord> customers;
};

inline Population random_population(std::mt19937_64& rng, std::size_t customers, std::size_t dim) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Population pop;
    pop.model.alpha_intercept = -2.0 + unit(rng);
    for (std::size_t j = 0; j < dim; ++j) {
        pop.model.alpha_weights.push_back(2.0 * unit(rng) - 1.0);
        pop.model.beta_weights.push_back(30.0 * unit(rng));
    }
    for (std::size_t i = 0; i < customers; ++i) {
        refcycle::alloc::CustomerRecord c;
        c.id = "c" + std::to_string(i);
        for (std::size_t j = 0; j < dim; ++j) c.features.push_back(unit(rng));
        pop.customers.push_back(std::move(c));
    }
    return pop;
}

}  // namespace testing_support
