#pragma once

// Exponential-cost verifiers. Everything here works on the full deterministic
// MDP whose states are the last l prices, or enumerates cycles directly, and
// is meant as ground truth for the polynomial solver.

#include "refcycle/core.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace refcycle::oracle {

using StateId = std::uint64_t;

struct OracleOptions {
    /// Largest admissible |P|^l.
    std::uint64_t node_budget = 1'000'000;
    /// Cap on simple cycles examined when picking the least optimal witness.
    std::size_t cycle_limit = 200'000;
    /// Absolute slack (scaled by 1 + max|g|) for calling an edge tight.
    double tolerance = 1e-9;
};

/// Full state graph over P^l. State (s^1, ..., s^l) lists the last l prices
/// with s^l the most recent; it is encoded base |P| with s^1 most significant.
class StateGraph {
public:
    StateGraph(const GainTable& gains, std::uint64_t node_budget = OracleOptions{}.node_budget);

    std::uint64_t node_count() const { return nodes_; }
    std::size_t degree() const { return gains_->size(); }
    const GainTable& gains() const { return *gains_; }

    StateId successor(StateId s, PriceIndex action) const { return (s % stride_) * degree() + action; }
    /// Lowest of the l prices held in the state.
    PriceIndex reference(StateId s) const { return reference_[s]; }
    double weight(StateId s, PriceIndex action) const { return (*gains_)(reference_[s], action); }

    std::vector<PriceIndex> decode(StateId s) const;
    StateId encode(std::span<const PriceIndex> prices) const;
    /// (p_top, ..., p_top), the state before the first offer.
    StateId start_state() const;
    /// State visited just before position t of `cycle` in steady state.
    StateId state_before(const PriceCycle& cycle, std::size_t t) const;

private:
    const GainTable* gains_;
    std::uint64_t nodes_ = 1;
    std::uint64_t stride_ = 1;  // |P|^(l-1)
    std::vector<PriceIndex> reference_;
};

struct MeanCycle {
    double value = 0.0;
    PriceCycle witness{std::vector<PriceIndex>{0}};
    std::uint64_t nodes = 0;
    /// False when the cycle limit cut the tie-breaking search short.
    bool witness_is_least = true;
};

/// Karp's maximum mean cycle over the full state graph. The witness is the
/// canonically least simple cycle among those attaining the maximum; the
/// reported value is the witness re-scored with cycle_objective.
MeanCycle max_mean_cycle(const GainTable& gains, const OracleOptions& options = {});

/// Karp's value alone (no witness, no re-scoring).
double karp_value(const StateGraph& graph);

/// Edges lying on at least one maximum-mean cycle, as (state, action) pairs.
struct CriticalGraph {
    double value = 0.0;
    std::vector<std::pair<StateId, PriceIndex>> edges;
    std::vector<StateId> nodes;
};
CriticalGraph critical_graph(const StateGraph& graph, double value, double tolerance);

/// Cycle of actions along a closed walk of states starting at `start`.
struct UniqueOptimum {
    bool unique = false;
    std::optional<PriceCycle> cycle;
};
/// The maximum-mean cycle is unique iff the critical graph is a single simple cycle.
UniqueOptimum unique_optimum(const StateGraph& graph, double value, double tolerance);

struct GeneratorSearch {
    double value = 0.0;
    GeneratorCycle best{std::vector<PriceIndex>{0}};
    std::size_t examined = 0;
};

/// Every generator cycle (each rotation class once) scored by the objective
/// of its expansion. Requires |P| <= 9.
GeneratorSearch exhaustive_generators(const GainTable& gains);

struct CycleSearch {
    double value = 0.0;
    /// Canonical forms of all cycles within tolerance of the best value, sorted.
    std::vector<PriceCycle> optimal;
    std::size_t examined = 0;
};

/// Every price cycle of length <= max_length, each equivalence class once.
CycleSearch exhaustive_cycles(const GainTable& gains, std::size_t max_length, double tolerance = 1e-12);

struct Step {
    std::vector<PriceIndex> state;
    PriceIndex reference = 0;
    PriceIndex price = 0;
    double gain = 0.0;
};

using Policy = std::function<PriceIndex(std::span<const PriceIndex> state)>;

/// Replays `horizon` offers from the all-top-price start state.
std::vector<Step> simulate(const PriceCycle& cycle, const GainTable& gains, std::size_t horizon);
std::vector<Step> simulate(const Policy& policy, const GainTable& gains, std::size_t horizon);

double average_gain(std::span<const Step> trajectory);

}  // namespace refcycle::oracle
