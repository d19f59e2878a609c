#include "refcycle/tightness.hpp"

#include "refcycle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace refcycle::tightness {

namespace {

std::vector<PriceIndex> sorted_targets(const GeneratorCycle& target) {
    std::vector<PriceIndex> out = target.values();
    std::sort(out.begin(), out.end());
    return out;
}

/// Bias spread over the full grid: target prices get their entry, the rest 0.
std::vector<double> spread_bias(const GeneratorCycle& target, std::size_t grid_size,
                                const std::vector<double>& target_bias) {
    const auto sorted = sorted_targets(target);
    std::vector<double> h(grid_size, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) h[sorted[i]] = target_bias[i];
    return h;
}

}  // namespace

GainTable assemble(const GeneratorCycle& target, const PriceGrid& grid, const std::vector<double>& target_bias,
                   double level, double penalty) {
    target.validate(grid);
    if (target_bias.size() != target.length()) throw ValidationError("need one bias value per target price");
    const std::size_t n = grid.size();
    const std::size_t memory = grid.memory();
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, penalty));

    if (target.length() == 1) {
        for (PriceIndex r = 0; r < n; ++r) rows[r][target[0]] = level;
        return GainTable(grid, rows);
    }
    const auto h = spread_bias(target, n, target_bias);
    for (std::size_t t = 0; t < target.length(); ++t) {
        const PriceIndex prev = target.previous(t);
        const PriceIndex cur = target[t];
        const double column =
            (h[prev] - h[cur]) / static_cast<double>(hold_length(prev, cur, memory)) + level;
        for (PriceIndex r = 0; r < n; ++r) rows[r][cur] = r >= prev ? column : 0.0;
    }
    return GainTable(grid, rows);
}

TightnessInstance build(const GeneratorCycle& target, const PriceGrid& grid, const BuildParams& params) {
    target.validate(grid);
    const std::size_t d = target.length();
    const auto memory = static_cast<double>(grid.memory());

    std::vector<double> bias(d);
    if (params.bias) {
        bias = *params.bias;
        if (bias.size() != d) throw ValidationError("need one bias value per target price");
    } else {
        for (std::size_t i = 0; i < d; ++i) bias[i] = static_cast<double>(i);
    }
    for (std::size_t i = 1; i < d; ++i)
        if (!(bias[i - 1] < bias[i])) throw ValidationError("bias must be strictly increasing in price");

    const double spread = bias.back() - bias.front();
    const double level = params.level.value_or(spread / memory + 1.0);
    if (!(level - spread / memory > 0.0))
        throw ValidationError("level must exceed (h_max - h_min) / l so that every target gain is positive");

    // Largest gain on a target column; the default penalty keeps any cycle
    // that touches a non-target price strictly below `level`.
    double top = level;
    if (d > 1) {
        const auto h = spread_bias(target, grid.size(), bias);
        for (std::size_t t = 0; t < d; ++t) {
            const PriceIndex prev = target.previous(t);
            top = std::max(top, (h[prev] - h[target[t]]) /
                                        static_cast<double>(hold_length(prev, target[t], grid.memory())) +
                                    level);
        }
    }
    const double cycle_periods = memory * static_cast<double>(grid.size());
    const double penalty = params.penalty.value_or(
        std::min(-(1.0 + static_cast<double>(d) * top), level - 1.0 - (cycle_periods - 1.0) * (top - level)));

    TightnessInstance out{assemble(target, grid, bias, level, penalty), target,
                          spread_bias(target, grid.size(), bias), level, penalty};
    if (!out.gains.reference_monotone()) throw Error("constructed gain table is not reference-monotone");
    return out;
}

Verification verify_uniqueness(const TightnessInstance& instance, const oracle::OracleOptions& options) {
    const oracle::StateGraph graph(instance.gains, options.node_budget);
    Verification out;
    out.oracle_value = oracle::karp_value(graph);
    const auto optimum = oracle::unique_optimum(graph, out.oracle_value, options.tolerance);
    out.optimum = optimum.cycle;
    const double scale = 1.0 + std::max(std::abs(instance.gains.min_gain()), std::abs(instance.gains.max_gain()));
    out.unique = optimum.unique && optimum.cycle &&
                 optimum.cycle->equivalent(expand(instance.target, instance.gains.memory())) &&
                 std::abs(out.oracle_value - instance.level) <= options.tolerance * scale;
    return out;
}

std::vector<std::vector<double>> bellman_slack(const TightnessInstance& instance) {
    const GainTable& g = instance.gains;
    const std::size_t n = g.size();
    std::vector<std::vector<double>> out(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
    const auto& h = instance.bias;
    for (PriceIndex r : instance.target.values())
        for (PriceIndex p : instance.target.values())
            out[r][p] = h[r] - ((g(r, p) - instance.level) * static_cast<double>(hold_length(r, p, g.memory())) + h[p]);
    return out;
}

}  // namespace refcycle::tightness
