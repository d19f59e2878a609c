#include "refcycle/solver.hpp"

#include "refcycle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace refcycle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double scale_of(const GainTable& g) { return 1.0 + std::max(std::abs(g.min_gain()), std::abs(g.max_gain())); }

double edge_weight(const GainTable& g, PriceIndex r, PriceIndex p, double ratio) {
    return (g(r, p) - ratio) * static_cast<double>(hold_length(r, p, g.memory()));
}

/// Bellman-Ford from a virtual source on weights (g - ratio) k. Returns a
/// positive-weight cycle (as the generator it traces) if one exists.
std::optional<GeneratorCycle> positive_cycle(const GainTable& g, double ratio, double step) {
    const std::size_t n = g.size();
    std::vector<double> dist(n, 0.0);
    std::vector<PriceIndex> pred(n, n);
    PriceIndex touched = n;
    for (std::size_t pass = 0; pass <= n; ++pass) {
        touched = n;
        for (PriceIndex r = 0; r < n; ++r)
            for (PriceIndex p = 0; p < n; ++p) {
                const double cand = dist[r] + edge_weight(g, r, p, ratio);
                if (cand > dist[p] + step) {
                    dist[p] = cand;
                    pred[p] = r;
                    touched = p;
                }
            }
        if (touched == n) return std::nullopt;
    }
    // Still relaxing after n passes: walking n predecessors lands on the cycle.
    PriceIndex v = touched;
    for (std::size_t i = 0; i < n; ++i) v = pred[v];
    std::vector<PriceIndex> reversed;
    PriceIndex u = v;
    do {
        reversed.push_back(u);
        u = pred[u];
    } while (u != v && reversed.size() <= n);
    std::reverse(reversed.begin(), reversed.end());
    return GeneratorCycle(std::move(reversed));
}

/// h(r) = best weight of a walk from r to `anchor` under weights (g - opt) k,
/// normalized so that h at the lowest price is 0.
std::vector<double> bias_vector(const GainTable& g, double opt, PriceIndex anchor, double step) {
    const std::size_t n = g.size();
    std::vector<double> h(n, kNegInf);
    h[anchor] = 0.0;
    for (std::size_t pass = 0; pass < n; ++pass) {
        bool changed = false;
        for (PriceIndex r = 0; r < n; ++r) {
            if (r == anchor) continue;
            for (PriceIndex p = 0; p < n; ++p) {
                if (h[p] == kNegInf) continue;
                const double cand = edge_weight(g, r, p, opt) + h[p];
                if (cand > h[r] + step || h[r] == kNegInf) {
                    h[r] = cand;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    const double base = h[0];
    for (double& v : h) v -= base;
    return h;
}

/// Lexicographically least generator (in canonical rotation) whose moves are
/// all tight in the Bellman equations at (opt, h).
GeneratorCycle least_tight_generator(const GainTable& g, double opt, const std::vector<double>& h, double slack) {
    const std::size_t n = g.size();
    std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
    for (PriceIndex r = 0; r < n; ++r)
        for (PriceIndex p = 0; p < n; ++p)
            tight[r][p] = std::abs(h[r] - (edge_weight(g, r, p, opt) + h[p])) <= slack;

    // Transitive closure of the tight graph.
    auto reach = tight;
    for (PriceIndex k = 0; k < n; ++k)
        for (PriceIndex i = 0; i < n; ++i)
            if (reach[i][k])
                for (PriceIndex j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = 1;

    PriceIndex first = n;
    for (PriceIndex a = 0; a < n && first == n; ++a)
        if (reach[a][a]) first = a;
    if (first == n) throw Error("no tight cycle found; tolerance too small for this table");
    if (tight[first][first]) return GeneratorCycle({first});

    // Can `from` get back to `first` through tight moves avoiding `used`?
    auto returns_home = [&](PriceIndex from, const std::vector<char>& used) {
        std::vector<char> seen(n, 0);
        std::vector<PriceIndex> work{from};
        seen[from] = 1;
        while (!work.empty()) {
            const PriceIndex u = work.back();
            work.pop_back();
            if (tight[u][first]) return true;
            for (PriceIndex v = 0; v < n; ++v)
                if (tight[u][v] && !seen[v] && !used[v] && v > first) {
                    seen[v] = 1;
                    work.push_back(v);
                }
        }
        return false;
    };

    std::vector<PriceIndex> seq{first};
    std::vector<char> used(n, 0);
    used[first] = 1;
    for (;;) {
        const PriceIndex cur = seq.back();
        if (seq.size() > 1 && tight[cur][first]) break;
        PriceIndex chosen = n;
        for (PriceIndex v = first + 1; v < n && chosen == n; ++v) {
            if (used[v] || !tight[cur][v]) continue;
            used[v] = 1;
            if (returns_home(v, used)) chosen = v;
            used[v] = 0;
        }
        if (chosen == n) throw Error("tight graph walk got stuck");
        used[chosen] = 1;
        seq.push_back(chosen);
    }
    return GeneratorCycle(std::move(seq));
}

}  // namespace

double generator_objective(const GeneratorCycle& generator, const GainTable& gains) {
    generator.validate(gains.grid());
    double total = 0.0;
    double periods = 0.0;
    for (std::size_t t = 0; t < generator.length(); ++t) {
        const PriceIndex prev = generator.previous(t);
        const auto k = static_cast<double>(hold_length(prev, generator[t], gains.memory()));
        total += gains(prev, generator[t]) * k;
        periods += k;
    }
    return total / periods;
}

double bellman_rhs(PriceIndex reference, double opt, const std::vector<double>& bias, const GainTable& gains) {
    double best = kNegInf;
    for (PriceIndex p = 0; p < gains.size(); ++p) best = std::max(best, edge_weight(gains, reference, p, opt) + bias[p]);
    return best;
}

double bellman_residual(const SolveResult& result, const GainTable& gains) {
    if (result.bias.size() != gains.size()) throw ValidationError("bias vector does not match the price grid");
    double worst = 0.0;
    for (PriceIndex r = 0; r < gains.size(); ++r)
        worst = std::max(worst, std::abs(result.bias[r] - bellman_rhs(r, result.opt, result.bias, gains)));
    return worst;
}

SolveResult solve(const GainTable& gains, const SolveOptions& options) {
    const double scale = scale_of(gains);
    const double step = 1e-13 * scale;

    // Below the smallest gain every cycle is positive; above the largest none is.
    double lo = gains.min_gain() - 1.0;
    double hi = gains.max_gain() + 1.0;
    const double width = options.bracket_tolerance * (1.0 + gains.max_gain() - gains.min_gain());
    std::optional<GeneratorCycle> witness = positive_cycle(gains, lo, step);
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (auto cyc = positive_cycle(gains, mid, step)) {
            lo = mid;
            witness = std::move(cyc);
        } else {
            hi = mid;
        }
    }
    if (!witness) throw Error("bisection found no cycle");

    // Polish: jump to the exact ratio of the witness until no better cycle exists.
    SolveResult out;
    double ratio = generator_objective(*witness, gains);
    while (auto better = positive_cycle(gains, ratio, step)) {
        const double next = generator_objective(*better, gains);
        if (!(next > ratio)) break;
        ratio = next;
        witness = std::move(better);
        ++out.polish_rounds;
    }

    const double slack = options.tight_tolerance * scale;
    const std::vector<double> h = bias_vector(gains, ratio, (*witness)[0], step);
    out.generator = least_tight_generator(gains, ratio, h, slack);
    out.opt = generator_objective(out.generator, gains);
    out.bias = bias_vector(gains, out.opt, out.generator[0], step);
    out.cycle = expand(out.generator, gains.memory());
    out.reference_monotone = gains.reference_monotone();
    out.assumption_violated = !out.reference_monotone;
    return out;
}

}  // namespace refcycle
