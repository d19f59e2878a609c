#pragma once

// Domain types for the reference-price model: a finite price grid with a
// customer memory length, the gain table g(r, p), price cycles and the
// generator cycles that describe l-up-1-down cycles compactly.
//
// Prices are addressed by their index in the grid everywhere below. Because
// grid prices are strictly increasing, comparing indices compares prices, and
// the minimum of a set of indices is the index of the minimum price.

#include "refcycle/price.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace refcycle {

using PriceIndex = std::size_t;

/// Ordered set of feasible prices together with the memory length l.
class PriceGrid {
public:
    PriceGrid(std::vector<Price> prices, std::size_t memory);

    std::size_t size() const { return prices_.size(); }
    std::size_t memory() const { return memory_; }
    const std::vector<Price>& prices() const { return prices_; }
    const Price& price(PriceIndex i) const { return prices_.at(i); }
    /// Index of the highest price.
    PriceIndex top() const { return prices_.size() - 1; }

    /// Index of an exact price level; throws ValidationError if absent.
    PriceIndex index_of(const Price& p) const;

    friend bool operator==(const PriceGrid&, const PriceGrid&) = default;

private:
    std::vector<Price> prices_;
    std::size_t memory_;
};

/// Dense |P| x |P| gain matrix; row = reference, column = offered price.
class GainTable {
public:
    /// `rows[r][p]` is g(r, p) with rows in increasing reference order.
    GainTable(PriceGrid grid, const std::vector<std::vector<double>>& rows);

    const PriceGrid& grid() const { return grid_; }
    std::size_t size() const { return grid_.size(); }
    std::size_t memory() const { return grid_.memory(); }

    double operator()(PriceIndex reference, PriceIndex price) const {
        return gains_[reference * grid_.size() + price];
    }

    /// True iff every column is weakly increasing in the reference.
    bool reference_monotone() const;

    double min_gain() const;
    double max_gain() const;

    /// Same table with `shift` added to every entry.
    GainTable shifted(double shift) const;

    std::vector<std::vector<double>> rows() const;

private:
    PriceGrid grid_;
    std::vector<double> gains_;
};

/// Cyclic price string pi_0 ... pi_{c-1}.
class PriceCycle {
public:
    explicit PriceCycle(std::vector<PriceIndex> tokens);

    std::size_t length() const { return tokens_.size(); }
    const std::vector<PriceIndex>& tokens() const { return tokens_; }
    PriceIndex operator[](std::size_t t) const { return tokens_[t]; }
    /// Token at a possibly negative or out-of-range position, taken mod c.
    PriceIndex at_cyclic(long long t) const;

    /// Rotation starting at position `start`.
    PriceCycle rotated(std::size_t start) const;
    PriceCycle repeated(std::size_t copies) const;
    /// Shortest prefix whose repetition is the whole cycle.
    PriceCycle primitive() const;
    /// Lexicographically least rotation of the primitive period.
    PriceCycle canonical() const;

    /// Same cyclic price sequence up to rotation and repetition.
    bool equivalent(const PriceCycle& other) const { return canonical() == other.canonical(); }

    void validate(const PriceGrid& grid) const;

    friend bool operator==(const PriceCycle&, const PriceCycle&) = default;
    friend auto operator<=>(const PriceCycle&, const PriceCycle&) = default;

private:
    std::vector<PriceIndex> tokens_;
};

/// Sequence of distinct prices rho_0 ... rho_{d-1}.
class GeneratorCycle {
public:
    /// Throws ValidationError on an empty or repeated sequence.
    explicit GeneratorCycle(std::vector<PriceIndex> values);

    std::size_t length() const { return values_.size(); }
    const std::vector<PriceIndex>& values() const { return values_; }
    PriceIndex operator[](std::size_t t) const { return values_[t]; }
    PriceIndex previous(std::size_t t) const { return values_[(t + values_.size() - 1) % values_.size()]; }

    /// Rotation that starts at the lowest price (the least rotation, as values are distinct).
    GeneratorCycle canonical() const;

    void validate(const PriceGrid& grid) const;

    friend bool operator==(const GeneratorCycle&, const GeneratorCycle&) = default;
    friend auto operator<=>(const GeneratorCycle&, const GeneratorCycle&) = default;

private:
    std::vector<PriceIndex> values_;
};

/// Holding time of a move from reference r to price p: l for an increase, 1 otherwise.
inline std::size_t hold_length(PriceIndex reference, PriceIndex price, std::size_t memory) {
    return reference < price ? memory : 1;
}

/// Reference at position t of a cycle in steady state: the lowest of the
/// `memory` preceding prices, wrapping around the cycle as often as needed.
PriceIndex reference_at(const PriceCycle& cycle, std::size_t memory, std::size_t t);

/// Long-run average gain of repeating `cycle` forever.
double cycle_objective(const PriceCycle& cycle, const GainTable& g);

/// rho_0^{k_0} ... rho_{d-1}^{k_{d-1}} with k_t = l after an increase and 1
/// after a decrease. A single-price generator expands to the constant cycle.
PriceCycle expand(const GeneratorCycle& generator, std::size_t memory);

/// Returns the generator (starting at its lowest price) when `cycle` is an
/// l-up-1-down cycle up to rotation and repetition, std::nullopt otherwise.
std::optional<GeneratorCycle> as_l_up_1_down(const PriceCycle& cycle, std::size_t memory);

inline bool is_l_up_1_down(const PriceCycle& cycle, std::size_t memory) {
    return as_l_up_1_down(cycle, memory).has_value();
}

/// Parses whitespace-separated price values ("1 2 2 2") against the grid.
PriceCycle parse_cycle(std::string_view text, const PriceGrid& grid);
std::string format_cycle(const PriceCycle& cycle, const PriceGrid& grid);
std::string format_generator(const GeneratorCycle& generator, const PriceGrid& grid);

}  // namespace refcycle
