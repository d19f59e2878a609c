#pragma once

// Constructive reduction of an arbitrary price cycle to an l-up-1-down cycle
// whose long-run average gain is at least as large.
//
// Stage one rewrites the substrings between "low points" (positions priced at
// or below their reference) so that every non-low price is held l periods.
// Stage two repeatedly cuts the cycle at two "reset points" carrying the same
// price and keeps the better half. Each rewrite is scored with
// cycle_objective, so every trace is a numerical certificate: objectives never
// decrease and the final cycle is checked to be l-up-1-down.

#include "refcycle/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace refcycle::reduce {

enum class StepKind { ShortGap, LongGap, Split };

/// "lemma1-case1", "lemma1-case2", "lemma2-split".
std::string to_string(StepKind kind);

struct TraceStep {
    StepKind kind;
    PriceCycle before;  // canonical
    PriceCycle after;   // canonical
    double objective_before = 0.0;
    double objective_after = 0.0;
};

struct ReductionTrace {
    std::vector<TraceStep> steps;
    std::size_t split_count() const;
};

/// Positions t with pi_t <= reference_at(t). Never empty.
std::vector<std::size_t> low_points(const PriceCycle& cycle, std::size_t memory);

/// Positions t where pi_t is the minimum of the l prices ending at t.
std::vector<std::size_t> reset_points(const PriceCycle& cycle, std::size_t memory);

/// Replacement options for the prices strictly between two low points.
struct GapReplacements {
    /// Gap shorter than l: the only substring is the empty one, and each gap
    /// price is also offered as a constant-cycle alternative.
    bool short_gap = false;
    std::vector<std::vector<PriceIndex>> substrings;
    std::vector<PriceIndex> constants;
};

/// For a gap of length >= l, substring j (j = 0..l-1) holds each of the gap
/// prices at offsets j, j+l, j+2l, ... for l periods.
GapReplacements gap_replacements(std::span<const PriceIndex> gap, std::size_t memory);

/// True iff some rotation splits the cycle into blocks rho^k with k in {1, l}
/// where every k = 1 block is priced at most the block before it.
bool has_block_form(const PriceCycle& cycle, std::size_t memory);

/// Stage one. Appends its steps to `trace` when given. Throws
/// AssumptionViolation if no candidate keeps the objective from dropping.
PriceCycle rewrite_gaps(const PriceCycle& cycle, const GainTable& gains, ReductionTrace* trace = nullptr);

struct Split {
    PriceCycle first;
    PriceCycle second;
    PriceCycle better;
};

/// Cuts at reset points i and j (distinct, equal prices): `first` runs from
/// just after j through i, `second` from just after i through j. Throws
/// ValidationError on a bad pair and AssumptionViolation if neither half is
/// at least as good as the whole.
Split split_at_resets(const PriceCycle& cycle, const GainTable& gains, std::size_t i, std::size_t j);

struct Reduction {
    PriceCycle cycle;
    ReductionTrace trace;
    /// Length of the cycle when the splitting stage began.
    std::size_t split_stage_length = 0;
};

/// Full pipeline. An input that is already l-up-1-down comes back unchanged
/// with an empty trace.
Reduction reduce_to_l_up_1_down(const PriceCycle& cycle, const GainTable& gains);

}  // namespace refcycle::reduce
