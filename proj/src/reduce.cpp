#include "refcycle/reduce.hpp"

#include "refcycle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace refcycle::reduce {

namespace {

constexpr double kStepSlack = 1e-12;

double slack_for(const GainTable& g) {
    return kStepSlack * (1.0 + std::max(std::abs(g.min_gain()), std::abs(g.max_gain())));
}

struct Marked {
    std::vector<PriceIndex> tokens;
    std::vector<char> low;  // token was a low point of the input
};

Marked rotate(const Marked& m, std::size_t start) {
    Marked out;
    const std::size_t c = m.tokens.size();
    out.tokens.resize(c);
    out.low.resize(c);
    for (std::size_t t = 0; t < c; ++t) {
        out.tokens[t] = m.tokens[(start + t) % c];
        out.low[t] = m.low[(start + t) % c];
    }
    return out;
}

}  // namespace

std::string to_string(StepKind kind) {
    switch (kind) {
        case StepKind::ShortGap: return "lemma1-case1";
        case StepKind::LongGap: return "lemma1-case2";
        case StepKind::Split: return "lemma2-split";
    }
    return "unknown";
}

std::size_t ReductionTrace::split_count() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const TraceStep& s) { return s.kind == StepKind::Split; }));
}

std::vector<std::size_t> low_points(const PriceCycle& cycle, std::size_t memory) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < cycle.length(); ++t)
        if (cycle[t] <= reference_at(cycle, memory, t)) out.push_back(t);
    return out;
}

std::vector<std::size_t> reset_points(const PriceCycle& cycle, std::size_t memory) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < cycle.length(); ++t) {
        PriceIndex low = cycle[t];
        for (std::size_t back = 1; back < memory; ++back)
            low = std::min(low, cycle.at_cyclic(static_cast<long long>(t) - static_cast<long long>(back)));
        if (cycle[t] == low) out.push_back(t);
    }
    return out;
}

GapReplacements gap_replacements(std::span<const PriceIndex> gap, std::size_t memory) {
    GapReplacements out;
    const std::size_t len = gap.size();
    if (len < memory) {
        out.short_gap = true;
        out.substrings.emplace_back();
        std::set<PriceIndex> distinct(gap.begin(), gap.end());
        out.constants.assign(distinct.begin(), distinct.end());
        return out;
    }
    for (std::size_t j = 0; j < memory; ++j) {
        std::vector<PriceIndex> sub;
        for (std::size_t pos = j; pos < len; pos += memory) sub.insert(sub.end(), memory, gap[pos]);
        out.substrings.push_back(std::move(sub));
    }
    return out;
}

bool has_block_form(const PriceCycle& cycle, std::size_t memory) {
    const std::size_t c = cycle.length();
    const auto& tok = cycle.tokens();
    auto uniform = [&](std::size_t from, std::size_t len) {
        for (std::size_t i = 1; i < len; ++i)
            if (tok[(from + i) % c] != tok[from % c]) return false;
        return true;
    };
    const std::size_t sizes[2] = {1, memory};
    for (std::size_t start = 0; start < c; ++start) {
        for (std::size_t k0 : sizes) {
            if (k0 > c || !uniform(start, k0)) continue;
            const PriceIndex v0 = tok[start];
            // reach[pos] = set of last-block values after covering `pos` tokens.
            std::vector<std::set<PriceIndex>> reach(c + 1);
            reach[k0].insert(v0);
            for (std::size_t pos = k0; pos < c; ++pos) {
                for (PriceIndex prev : reach[pos]) {
                    for (std::size_t k : sizes) {
                        if (pos + k > c || !uniform(start + pos, k)) continue;
                        const PriceIndex v = tok[(start + pos) % c];
                        // With l = 1 both block sizes coincide and an increase is a legal l-block.
                        if (k == 1 && memory != 1 && v > prev) continue;
                        reach[pos + k].insert(v);
                    }
                }
            }
            for (PriceIndex last : reach[c])
                if (k0 == memory || v0 <= last) return true;
        }
    }
    return false;
}

PriceCycle rewrite_gaps(const PriceCycle& cycle, const GainTable& gains, ReductionTrace* trace) {
    cycle.validate(gains.grid());
    const std::size_t memory = gains.memory();
    const double slack = slack_for(gains);

    Marked cur;
    cur.tokens = cycle.tokens();
    cur.low.assign(cycle.length(), 0);
    for (std::size_t t : low_points(cycle, memory)) cur.low[t] = 1;
    const auto total = static_cast<std::size_t>(std::count(cur.low.begin(), cur.low.end(), 1));

    for (std::size_t gap_index = 0; gap_index < total; ++gap_index) {
        // Rotate so the gap_index-th low point sits at c-1; the gap is 0..t'-1.
        std::size_t seen = 0;
        std::size_t at = 0;
        for (std::size_t t = 0; t < cur.tokens.size(); ++t)
            if (cur.low[t] && seen++ == gap_index) {
                at = t;
                break;
            }
        Marked rot = rotate(cur, (at + 1) % cur.tokens.size());
        std::size_t gap_len = 0;
        while (!rot.low[gap_len]) ++gap_len;
        if (gap_len == 0) continue;

        const PriceCycle before(rot.tokens);
        const double obj_before = cycle_objective(before, gains);
        const std::vector<PriceIndex> gap(rot.tokens.begin(), rot.tokens.begin() + static_cast<long>(gap_len));
        const GapReplacements options = gap_replacements(gap, memory);

        double best_value = -std::numeric_limits<double>::infinity();
        std::optional<std::vector<PriceIndex>> best_sub;
        std::optional<PriceIndex> best_const;
        bool keep_current = false;
        for (const auto& sub : options.substrings) {
            std::vector<PriceIndex> tokens = sub;
            tokens.insert(tokens.end(), rot.tokens.begin() + static_cast<long>(gap_len), rot.tokens.end());
            const double value = cycle_objective(PriceCycle(tokens), gains);
            if (sub == gap && value >= obj_before - slack) keep_current = true;
            if (value > best_value) {
                best_value = value;
                best_sub = sub;
            }
        }
        for (PriceIndex p : options.constants) {
            const double value = gains(p, p);
            if (value > best_value) {
                best_value = value;
                best_sub.reset();
                best_const = p;
            }
        }
        if (keep_current) continue;
        if (best_value < obj_before - slack)
            throw AssumptionViolation("gap rewrite lowered the objective; gains are not reference-monotone");

        const StepKind kind = options.short_gap ? StepKind::ShortGap : StepKind::LongGap;
        if (!best_sub) {
            const PriceCycle after({*best_const});
            if (trace) trace->steps.push_back({kind, before.canonical(), after, obj_before, best_value});
            return after;
        }
        Marked next;
        next.tokens = *best_sub;
        next.low.assign(best_sub->size(), 0);
        next.tokens.insert(next.tokens.end(), rot.tokens.begin() + static_cast<long>(gap_len), rot.tokens.end());
        next.low.insert(next.low.end(), rot.low.begin() + static_cast<long>(gap_len), rot.low.end());
        if (trace)
            trace->steps.push_back(
                {kind, before.canonical(), PriceCycle(next.tokens).canonical(), obj_before, best_value});
        cur = std::move(next);
    }
    return PriceCycle(cur.tokens);
}

Split split_at_resets(const PriceCycle& cycle, const GainTable& gains, std::size_t i, std::size_t j) {
    cycle.validate(gains.grid());
    const std::size_t c = cycle.length();
    if (i >= c || j >= c || i == j) throw ValidationError("split needs two distinct positions in the cycle");
    if (cycle[i] != cycle[j]) throw ValidationError("split positions must carry the same price");
    const auto resets = reset_points(cycle, gains.memory());
    auto is_reset = [&](std::size_t t) { return std::binary_search(resets.begin(), resets.end(), t); };
    if (!is_reset(i) || !is_reset(j)) throw ValidationError("split positions must both be reset points");

    const PriceCycle rot = cycle.rotated((j + 1) % c);
    const std::size_t cut = (i + c - j - 1) % c + 1;  // first half is rot[0, cut)
    const auto& tok = rot.tokens();
    Split out{PriceCycle({tok.begin(), tok.begin() + static_cast<long>(cut)}),
              PriceCycle({tok.begin() + static_cast<long>(cut), tok.end()}), PriceCycle({0})};
    const double whole = cycle_objective(cycle, gains);
    const double a = cycle_objective(out.first, gains);
    const double b = cycle_objective(out.second, gains);
    out.better = a >= b ? out.first : out.second;
    if (std::max(a, b) < whole - slack_for(gains))
        throw AssumptionViolation("neither half of the split is as good as the whole cycle");
    return out;
}

Reduction reduce_to_l_up_1_down(const PriceCycle& cycle, const GainTable& gains) {
    cycle.validate(gains.grid());
    const std::size_t memory = gains.memory();
    Reduction out{cycle, {}, 0};
    if (is_l_up_1_down(cycle, memory)) {
        out.split_stage_length = cycle.length();
        return out;
    }

    PriceCycle cur = rewrite_gaps(cycle, gains, &out.trace);
    out.split_stage_length = cur.length();
    while (!is_l_up_1_down(cur, memory)) {
        const auto resets = reset_points(cur, memory);
        const std::size_t c = cur.length();
        std::optional<std::pair<std::size_t, std::size_t>> pick;
        std::size_t pick_cost = std::numeric_limits<std::size_t>::max();
        for (std::size_t a = 0; a < resets.size(); ++a)
            for (std::size_t b = a + 1; b < resets.size(); ++b) {
                const std::size_t i = resets[a];
                const std::size_t j = resets[b];
                if (cur[i] != cur[j]) continue;
                const std::size_t cost = std::max(j - i, c - (j - i));
                if (cost < pick_cost) {
                    pick_cost = cost;
                    pick.emplace(i, j);
                }
            }
        if (!pick) throw AssumptionViolation("no equal-price reset points left, yet the cycle is not l-up-1-down");

        const double before = cycle_objective(cur, gains);
        const Split split = split_at_resets(cur, gains, pick->first, pick->second);
        out.trace.steps.push_back(
            {StepKind::Split, cur.canonical(), split.better.canonical(), before, cycle_objective(split.better, gains)});
        cur = split.better;
        if (!has_block_form(cur, memory)) cur = rewrite_gaps(cur, gains, &out.trace);
    }
    out.cycle = cur;
    return out;
}

}  // namespace refcycle::reduce
