#pragma once

// Instances showing that no l-up-1-down cycle can be ruled out in advance:
// for any generator cycle, a reference-monotone gain table whose unique
// optimal cycle is that generator's expansion.

#include "refcycle/core.hpp"
#include "refcycle/oracle.hpp"

#include <optional>
#include <vector>

namespace refcycle::tightness {

struct BuildParams {
    /// Relative values for the target prices in increasing price order;
    /// defaults to 0, 1, ..., d-1.
    std::optional<std::vector<double>> bias;
    /// Target average gain; defaults to (h_max - h_min) / l + 1.
    std::optional<double> level;
    /// Gain for every column outside the target; defaults to a value low
    /// enough that any cycle using such a price loses to `level`.
    std::optional<double> penalty;
};

struct TightnessInstance {
    GainTable gains;
    GeneratorCycle target;
    /// h indexed like the grid; entries outside the target are unused (0).
    std::vector<double> bias;
    double level = 0.0;
    double penalty = 0.0;
};

/// Gain table from the construction with no validation of its parameters.
GainTable assemble(const GeneratorCycle& target, const PriceGrid& grid, const std::vector<double>& target_bias,
                   double level, double penalty);

/// Validated construction. Throws ValidationError when the bias is not
/// strictly increasing in price or the level is too small to keep every
/// target gain positive.
TightnessInstance build(const GeneratorCycle& target, const PriceGrid& grid, const BuildParams& params = {});

struct Verification {
    bool unique = false;
    double oracle_value = 0.0;
    std::optional<PriceCycle> optimum;
};

/// Runs the full state-graph oracle: true iff its maximum equals the level
/// and the only maximizing cycle is expand(target), up to rotation and repetition.
Verification verify_uniqueness(const TightnessInstance& instance, const oracle::OracleOptions& options = {});

/// Bellman slack h(r) - [(g(r,p) - level) k(r,p) + h(p)] over target pairs;
/// zero exactly on consecutive generator moves when the construction is tight.
std::vector<std::vector<double>> bellman_slack(const TightnessInstance& instance);

}  // namespace refcycle::tightness
