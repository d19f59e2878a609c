#pragma once

// Polynomial-time solver for the reduced problem over generator cycles.
//
// State and action are both a price. Moving from reference r to price p earns
// g(r, p) per period and takes k(r, p) periods: l if p > r (the new price must
// be held l times before it becomes the reference), 1 otherwise. The best
// long-run average is a maximum ratio cycle on the complete digraph over P,
// found here by bisection on the ratio with Bellman-Ford positive-cycle tests.

#include "refcycle/core.hpp"

#include <vector>

namespace refcycle {

struct SolveOptions {
    /// Bisection stops once the bracket is narrower than this times (1 + gain range).
    double bracket_tolerance = 1e-12;
    /// Slack (times 1 + max|g|) under which a Bellman equation counts as tight.
    double tight_tolerance = 1e-9;
};

struct SolveResult {
    /// Long-run average gain of `generator`, re-scored exactly.
    double opt = 0.0;
    /// Relative values h(p), normalized so that h at the lowest price is 0.
    std::vector<double> bias;
    GeneratorCycle generator{std::vector<PriceIndex>{0}};
    PriceCycle cycle{std::vector<PriceIndex>{0}};
    bool reference_monotone = true;
    /// Set when the table is not reference-monotone: `opt` is then only the
    /// best l-up-1-down value and may be beaten by other cycles.
    bool assumption_violated = false;
    /// Ratio-polishing rounds after bisection (diagnostic).
    std::size_t polish_rounds = 0;
};

/// Average gain of expand(generator), computed from the generator alone.
double generator_objective(const GeneratorCycle& generator, const GainTable& gains);

SolveResult solve(const GainTable& gains, const SolveOptions& options = {});

/// max_r | h(r) - max_p [ (g(r,p) - opt) k(r,p) + h(p) ] |.
double bellman_residual(const SolveResult& result, const GainTable& gains);

/// Right-hand side of the Bellman equation at reference r.
double bellman_rhs(PriceIndex reference, double opt, const std::vector<double>& bias, const GainTable& gains);

}  // namespace refcycle
