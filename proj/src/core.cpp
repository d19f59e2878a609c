#include "refcycle/core.hpp"

#include "refcycle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace refcycle {

PriceGrid::PriceGrid(std::vector<Price> prices, std::size_t memory)
    : prices_(std::move(prices)), memory_(memory) {
    if (prices_.empty()) throw ValidationError("price grid must contain at least one price");
    if (memory_ < 1) throw ValidationError("memory length must be at least 1");
    for (std::size_t i = 1; i < prices_.size(); ++i)
        if (!(prices_[i - 1] < prices_[i]))
            throw ValidationError("prices must be strictly increasing");
}

PriceIndex PriceGrid::index_of(const Price& p) const {
    auto it = std::lower_bound(prices_.begin(), prices_.end(), p);
    if (it == prices_.end() || *it != p)
        throw ValidationError("price " + p.to_string() + " is not on the grid");
    return static_cast<PriceIndex>(it - prices_.begin());
}

GainTable::GainTable(PriceGrid grid, const std::vector<std::vector<double>>& rows)
    : grid_(std::move(grid)) {
    const std::size_t n = grid_.size();
    if (rows.size() != n) throw ValidationError("gain table needs one row per price");
    gains_.reserve(n * n);
    for (const auto& row : rows) {
        if (row.size() != n) throw ValidationError("gain table rows must have one entry per price");
        for (double v : row) {
            if (!std::isfinite(v)) throw ValidationError("gain table entries must be finite");
            gains_.push_back(v);
        }
    }
}

bool GainTable::reference_monotone() const {
    const std::size_t n = size();
    for (PriceIndex p = 0; p < n; ++p)
        for (PriceIndex r = 1; r < n; ++r)
            if ((*this)(r, p) < (*this)(r - 1, p)) return false;
    return true;
}

double GainTable::min_gain() const { return *std::min_element(gains_.begin(), gains_.end()); }
double GainTable::max_gain() const { return *std::max_element(gains_.begin(), gains_.end()); }

GainTable GainTable::shifted(double shift) const {
    GainTable out = *this;
    for (double& v : out.gains_) v += shift;
    return out;
}

std::vector<std::vector<double>> GainTable::rows() const {
    const std::size_t n = size();
    std::vector<std::vector<double>> out(n, std::vector<double>(n));
    for (PriceIndex r = 0; r < n; ++r)
        for (PriceIndex p = 0; p < n; ++p) out[r][p] = (*this)(r, p);
    return out;
}

PriceCycle::PriceCycle(std::vector<PriceIndex> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty()) throw ValidationError("price cycle must be nonempty");
}

PriceIndex PriceCycle::at_cyclic(long long t) const {
    const auto c = static_cast<long long>(tokens_.size());
    return tokens_[static_cast<std::size_t>(((t % c) + c) % c)];
}

PriceCycle PriceCycle::rotated(std::size_t start) const {
    std::vector<PriceIndex> out(tokens_.size());
    for (std::size_t t = 0; t < tokens_.size(); ++t) out[t] = tokens_[(start + t) % tokens_.size()];
    return PriceCycle(std::move(out));
}

PriceCycle PriceCycle::repeated(std::size_t copies) const {
    if (copies < 1) throw ValidationError("repetition count must be at least 1");
    std::vector<PriceIndex> out;
    out.reserve(tokens_.size() * copies);
    for (std::size_t i = 0; i < copies; ++i) out.insert(out.end(), tokens_.begin(), tokens_.end());
    return PriceCycle(std::move(out));
}

PriceCycle PriceCycle::primitive() const {
    const std::size_t c = tokens_.size();
    for (std::size_t period = 1; period < c; ++period) {
        if (c % period != 0) continue;
        bool periodic = true;
        for (std::size_t t = period; t < c && periodic; ++t) periodic = tokens_[t] == tokens_[t - period];
        if (periodic) return PriceCycle({tokens_.begin(), tokens_.begin() + static_cast<long>(period)});
    }
    return *this;
}

PriceCycle PriceCycle::canonical() const {
    const PriceCycle base = primitive();
    const std::size_t c = base.length();
    std::size_t best = 0;
    for (std::size_t s = 1; s < c; ++s) {
        for (std::size_t t = 0; t < c; ++t) {
            const PriceIndex a = base.tokens_[(s + t) % c];
            const PriceIndex b = base.tokens_[(best + t) % c];
            if (a != b) {
                if (a < b) best = s;
                break;
            }
        }
    }
    return base.rotated(best);
}

void PriceCycle::validate(const PriceGrid& grid) const {
    for (PriceIndex p : tokens_)
        if (p >= grid.size()) throw ValidationError("cycle token out of range of the price grid");
}

GeneratorCycle::GeneratorCycle(std::vector<PriceIndex> values) : values_(std::move(values)) {
    if (values_.empty()) throw ValidationError("generator cycle must be nonempty");
    std::vector<PriceIndex> sorted = values_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("generator cycle prices must be distinct");
}

GeneratorCycle GeneratorCycle::canonical() const {
    auto low = std::min_element(values_.begin(), values_.end());
    std::vector<PriceIndex> out(low, values_.end());
    out.insert(out.end(), values_.begin(), low);
    return GeneratorCycle(std::move(out));
}

void GeneratorCycle::validate(const PriceGrid& grid) const {
    for (PriceIndex p : values_)
        if (p >= grid.size()) throw ValidationError("generator price out of range of the price grid");
}

PriceIndex reference_at(const PriceCycle& cycle, std::size_t memory, std::size_t t) {
    const std::size_t c = cycle.length();
    const auto& tok = cycle.tokens();
    if (memory >= c) return *std::min_element(tok.begin(), tok.end());
    PriceIndex best = tok[(t + c - 1) % c];
    for (std::size_t back = 2; back <= memory; ++back) best = std::min(best, tok[(t + c - back) % c]);
    return best;
}

double cycle_objective(const PriceCycle& cycle, const GainTable& g) {
    cycle.validate(g.grid());
    double total = 0.0;
    for (std::size_t t = 0; t < cycle.length(); ++t) total += g(reference_at(cycle, g.memory(), t), cycle[t]);
    return total / static_cast<double>(cycle.length());
}

PriceCycle expand(const GeneratorCycle& generator, std::size_t memory) {
    if (generator.length() == 1) return PriceCycle({generator[0]});
    std::vector<PriceIndex> tokens;
    for (std::size_t t = 0; t < generator.length(); ++t)
        tokens.insert(tokens.end(), hold_length(generator.previous(t), generator[t], memory), generator[t]);
    return PriceCycle(std::move(tokens));
}

std::optional<GeneratorCycle> as_l_up_1_down(const PriceCycle& cycle, std::size_t memory) {
    const PriceCycle base = cycle.primitive();
    const std::size_t c = base.length();
    if (c == 1) return GeneratorCycle({base[0]});

    // Start at a run boundary so that no run straddles the wrap-around.
    std::size_t start = 0;
    while (base[start] == base.at_cyclic(static_cast<long long>(start) - 1)) ++start;
    const PriceCycle aligned = base.rotated(start);

    std::vector<PriceIndex> values;
    std::vector<std::size_t> runs;
    for (std::size_t t = 0; t < c; ++t) {
        if (t == 0 || aligned[t] != aligned[t - 1]) {
            values.push_back(aligned[t]);
            runs.push_back(0);
        }
        ++runs.back();
    }
    std::vector<PriceIndex> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return std::nullopt;

    const std::size_t d = values.size();
    for (std::size_t t = 0; t < d; ++t)
        if (runs[t] != hold_length(values[(t + d - 1) % d], values[t], memory)) return std::nullopt;
    return GeneratorCycle(std::move(values)).canonical();
}

PriceCycle parse_cycle(std::string_view text, const PriceGrid& grid) {
    std::istringstream in{std::string(text)};
    std::vector<PriceIndex> tokens;
    std::string word;
    while (in >> word) tokens.push_back(grid.index_of(Price::parse(word)));
    if (tokens.empty()) throw ValidationError("empty price cycle");
    return PriceCycle(std::move(tokens));
}

std::string format_cycle(const PriceCycle& cycle, const PriceGrid& grid) {
    std::string out;
    for (std::size_t t = 0; t < cycle.length(); ++t) {
        if (t) out += ' ';
        out += grid.price(cycle[t]).to_string();
    }
    return out;
}

std::string format_generator(const GeneratorCycle& generator, const PriceGrid& grid) {
    std::string out;
    for (std::size_t t = 0; t < generator.length(); ++t) {
        if (t) out += ' ';
        out += grid.price(generator[t]).to_string();
    }
    return out;
}

}  // namespace refcycle
