#include "refcycle/oracle.hpp"

#include "refcycle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace refcycle::oracle {

StateGraph::StateGraph(const GainTable& gains, std::uint64_t node_budget) : gains_(&gains) {
    const std::uint64_t n = gains.size();
    for (std::size_t i = 0; i < gains.memory(); ++i) {
        if (nodes_ > node_budget / n)
            throw BudgetExceeded("state graph has more than " + std::to_string(node_budget) + " nodes");
        nodes_ *= n;
    }
    if (nodes_ > node_budget)
        throw BudgetExceeded("state graph has more than " + std::to_string(node_budget) + " nodes");
    stride_ = nodes_ / n;

    reference_.resize(nodes_);
    for (StateId s = 0; s < nodes_; ++s) {
        PriceIndex low = std::numeric_limits<PriceIndex>::max();
        StateId rest = s;
        for (std::size_t i = 0; i < gains.memory(); ++i) {
            low = std::min<PriceIndex>(low, static_cast<PriceIndex>(rest % n));
            rest /= n;
        }
        reference_[s] = low;
    }
}

std::vector<PriceIndex> StateGraph::decode(StateId s) const {
    const std::size_t l = gains_->memory();
    std::vector<PriceIndex> out(l);
    for (std::size_t i = l; i-- > 0;) {
        out[i] = static_cast<PriceIndex>(s % degree());
        s /= degree();
    }
    return out;
}

StateId StateGraph::encode(std::span<const PriceIndex> prices) const {
    if (prices.size() != gains_->memory()) throw ValidationError("state must list exactly l prices");
    StateId s = 0;
    for (PriceIndex p : prices) {
        if (p >= degree()) throw ValidationError("state price out of range");
        s = s * degree() + p;
    }
    return s;
}

StateId StateGraph::start_state() const {
    std::vector<PriceIndex> top(gains_->memory(), gains_->grid().top());
    return encode(top);
}

StateId StateGraph::state_before(const PriceCycle& cycle, std::size_t t) const {
    const std::size_t l = gains_->memory();
    std::vector<PriceIndex> window(l);
    for (std::size_t i = 0; i < l; ++i)
        window[i] = cycle.at_cyclic(static_cast<long long>(t) - static_cast<long long>(l - i));
    return encode(window);
}

double karp_value(const StateGraph& graph) {
    const std::uint64_t n = graph.node_count();
    const std::size_t deg = graph.degree();
    constexpr double kNone = -std::numeric_limits<double>::infinity();

    // Walks of exactly k edges may start anywhere, so level 0 is all zeros.
    auto advance = [&](const std::vector<double>& cur, std::vector<double>& next) {
        std::fill(next.begin(), next.end(), kNone);
        for (StateId u = 0; u < n; ++u)
            for (PriceIndex p = 0; p < deg; ++p) {
                const StateId v = graph.successor(u, p);
                next[v] = std::max(next[v], cur[u] + graph.weight(u, p));
            }
    };

    // Two passes keep memory linear in n: first D_n, then every D_k again.
    std::vector<double> cur(n, 0.0);
    std::vector<double> next(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        advance(cur, next);
        cur.swap(next);
    }
    const std::vector<double> top_level = cur;

    std::vector<double> worst(n, std::numeric_limits<double>::infinity());
    std::fill(cur.begin(), cur.end(), 0.0);
    for (std::uint64_t k = 0; k < n; ++k) {
        for (StateId v = 0; v < n; ++v)
            if (cur[v] != kNone)
                worst[v] = std::min(worst[v], (top_level[v] - cur[v]) / static_cast<double>(n - k));
        advance(cur, next);
        cur.swap(next);
    }
    double best = kNone;
    for (StateId v = 0; v < n; ++v)
        if (top_level[v] != kNone) best = std::max(best, worst[v]);
    return best;
}

namespace {

double gain_scale(const GainTable& g) { return 1.0 + std::max(std::abs(g.min_gain()), std::abs(g.max_gain())); }

/// Strongly connected components of the subgraph given by adjacency lists (Kosaraju, iterative).
std::vector<std::uint64_t> components(const std::vector<std::vector<StateId>>& adj) {
    const std::size_t n = adj.size();
    std::vector<std::vector<StateId>> radj(n);
    for (StateId u = 0; u < n; ++u)
        for (StateId v : adj[u]) radj[v].push_back(u);

    std::vector<StateId> order;
    order.reserve(n);
    std::vector<char> seen(n, 0);
    std::vector<std::pair<StateId, std::size_t>> stack;
    for (StateId root = 0; root < n; ++root) {
        if (seen[root]) continue;
        seen[root] = 1;
        stack.emplace_back(root, 0);
        while (!stack.empty()) {
            auto& [u, i] = stack.back();
            if (i < adj[u].size()) {
                const StateId v = adj[u][i++];
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }

    constexpr auto kUnset = std::numeric_limits<std::uint64_t>::max();
    std::vector<std::uint64_t> comp(n, kUnset);
    std::uint64_t next_id = 0;
    std::vector<StateId> work;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] != kUnset) continue;
        comp[*it] = next_id;
        work.push_back(*it);
        while (!work.empty()) {
            const StateId u = work.back();
            work.pop_back();
            for (StateId v : radj[u])
                if (comp[v] == kUnset) {
                    comp[v] = next_id;
                    work.push_back(v);
                }
        }
        ++next_id;
    }
    return comp;
}

}  // namespace

CriticalGraph critical_graph(const StateGraph& graph, double value, double tolerance) {
    const std::uint64_t n = graph.node_count();
    const std::size_t deg = graph.degree();
    const double scale = gain_scale(graph.gains());
    const double slack = tolerance * scale;
    const double step = 1e-13 * scale;

    // Longest-walk potentials for weights w - value; no cycle is positive.
    std::vector<double> potential(n, 0.0);
    for (std::uint64_t pass = 0; pass <= n; ++pass) {
        bool changed = false;
        for (StateId u = 0; u < n; ++u)
            for (PriceIndex p = 0; p < deg; ++p) {
                const StateId v = graph.successor(u, p);
                const double cand = potential[u] + graph.weight(u, p) - value;
                if (cand > potential[v] + step) {
                    potential[v] = cand;
                    changed = true;
                }
            }
        if (!changed) break;
    }

    std::vector<std::vector<StateId>> tight(n);
    for (StateId u = 0; u < n; ++u)
        for (PriceIndex p = 0; p < deg; ++p) {
            const StateId v = graph.successor(u, p);
            if (potential[u] + graph.weight(u, p) - value >= potential[v] - slack) tight[u].push_back(v);
        }
    const auto comp = components(tight);

    CriticalGraph out;
    out.value = value;
    std::vector<char> on_cycle(n, 0);
    for (StateId u = 0; u < n; ++u)
        for (PriceIndex p = 0; p < deg; ++p) {
            const StateId v = graph.successor(u, p);
            if (comp[u] == comp[v] &&
                potential[u] + graph.weight(u, p) - value >= potential[v] - slack) {
                out.edges.emplace_back(u, p);
                on_cycle[u] = 1;
            }
        }
    for (StateId u = 0; u < n; ++u)
        if (on_cycle[u]) out.nodes.push_back(u);
    return out;
}

UniqueOptimum unique_optimum(const StateGraph& graph, double value, double tolerance) {
    const CriticalGraph crit = critical_graph(graph, value, tolerance);
    UniqueOptimum out;
    if (crit.nodes.empty()) return out;

    std::vector<std::size_t> in_degree(graph.node_count(), 0);
    std::vector<std::size_t> out_degree(graph.node_count(), 0);
    std::vector<PriceIndex> action(graph.node_count(), 0);
    for (auto [u, p] : crit.edges) {
        ++out_degree[u];
        ++in_degree[graph.successor(u, p)];
        action[u] = p;
    }
    for (StateId u : crit.nodes)
        if (in_degree[u] != 1 || out_degree[u] != 1) return out;

    std::vector<PriceIndex> labels;
    StateId u = crit.nodes.front();
    do {
        labels.push_back(action[u]);
        u = graph.successor(u, action[u]);
    } while (u != crit.nodes.front() && labels.size() <= crit.nodes.size());
    if (labels.size() != crit.nodes.size()) return out;  // more than one disjoint cycle
    out.unique = true;
    out.cycle = PriceCycle(std::move(labels));
    return out;
}

namespace {

/// Canonically least action cycle among simple cycles of the critical graph.
/// Returns false if the enumeration budget ran out (the best seen so far is kept).
bool least_critical_cycle(const StateGraph& graph, const CriticalGraph& crit, std::size_t limit,
                          PriceCycle& best) {
    const std::uint64_t n = graph.node_count();
    std::vector<std::vector<PriceIndex>> out_actions(n);
    for (auto [u, p] : crit.edges) out_actions[u].push_back(p);

    // Fallback witness: follow first critical edges until a state repeats.
    {
        std::vector<std::int64_t> visit(n, -1);
        std::vector<PriceIndex> labels;
        StateId u = crit.nodes.front();
        while (visit[u] < 0) {
            visit[u] = static_cast<std::int64_t>(labels.size());
            labels.push_back(out_actions[u].front());
            u = graph.successor(u, out_actions[u].front());
        }
        best = PriceCycle({labels.begin() + visit[u], labels.end()}).canonical();
    }

    std::size_t found = 0;
    std::size_t steps = 0;
    const std::size_t step_limit = 50 * limit + 1000;
    std::vector<char> on_path(n, 0);
    struct Frame {
        StateId node;
        std::size_t next;
    };
    std::vector<Frame> stack;
    std::vector<PriceIndex> labels;
    for (StateId start : crit.nodes) {
        stack.push_back({start, 0});
        on_path[start] = 1;
        while (!stack.empty()) {
            if (++steps > step_limit || found > limit) {
                for (const Frame& f : stack) on_path[f.node] = 0;
                return false;
            }
            Frame& top = stack.back();
            if (top.next == out_actions[top.node].size()) {
                on_path[top.node] = 0;
                stack.pop_back();
                if (!labels.empty()) labels.pop_back();
                continue;
            }
            const PriceIndex p = out_actions[top.node][top.next++];
            const StateId v = graph.successor(top.node, p);
            if (v == start) {
                labels.push_back(p);
                PriceCycle candidate = PriceCycle(labels).canonical();
                if (candidate < best) best = std::move(candidate);
                labels.pop_back();
                ++found;
            } else if (v > start && !on_path[v]) {
                labels.push_back(p);
                on_path[v] = 1;
                stack.push_back({v, 0});
            }
        }
    }
    return true;
}

}  // namespace

MeanCycle max_mean_cycle(const GainTable& gains, const OracleOptions& options) {
    const StateGraph graph(gains, options.node_budget);
    const double value = karp_value(graph);
    const CriticalGraph crit = critical_graph(graph, value, options.tolerance);
    if (crit.nodes.empty()) throw Error("critical graph is empty; tolerance too tight for this table");

    MeanCycle out;
    out.nodes = graph.node_count();
    out.witness_is_least = least_critical_cycle(graph, crit, options.cycle_limit, out.witness);
    out.value = cycle_objective(out.witness, gains);
    return out;
}

GeneratorSearch exhaustive_generators(const GainTable& gains) {
    const std::size_t n = gains.size();
    if (n > 9) throw ValidationError("exhaustive generator search is limited to 9 prices");
    const double tie = 1e-12 * gain_scale(gains);

    GeneratorSearch out;
    bool have = false;
    std::vector<PriceIndex> seq;
    std::vector<char> used(n, 0);

    // Depth-first in lexicographic order, so the first best found is the least.
    std::function<void()> visit = [&]() {
        const GeneratorCycle genc(seq);
        const double value = cycle_objective(expand(genc, gains.memory()), gains);
        ++out.examined;
        if (!have || value > out.value + tie) {
            out.value = value;
            out.best = genc;
            have = true;
        }
        for (PriceIndex v = seq.front() + 1; v < n; ++v) {
            if (used[v]) continue;
            used[v] = 1;
            seq.push_back(v);
            visit();
            seq.pop_back();
            used[v] = 0;
        }
    };
    for (PriceIndex first = 0; first < n; ++first) {
        seq.assign(1, first);
        used.assign(n, 0);
        used[first] = 1;
        visit();
    }
    return out;
}

CycleSearch exhaustive_cycles(const GainTable& gains, std::size_t max_length, double tolerance) {
    if (max_length < 1) throw ValidationError("max_length must be at least 1");
    const std::size_t k = gains.size();
    const double tie = tolerance * gain_scale(gains);

    // Lyndon words of length <= max_length in lexicographic order: exactly one
    // representative per primitive cycle, already in canonical form.
    std::vector<std::pair<double, PriceCycle>> scored;
    CycleSearch out;
    out.value = -std::numeric_limits<double>::infinity();
    std::vector<long long> w{-1};
    while (!w.empty()) {
        ++w.back();
        const std::size_t m = w.size();
        PriceCycle cycle(std::vector<PriceIndex>(w.begin(), w.end()));
        const double value = cycle_objective(cycle, gains);
        ++out.examined;
        out.value = std::max(out.value, value);
        scored.emplace_back(value, std::move(cycle));
        while (w.size() < max_length) w.push_back(w[w.size() - m]);
        while (!w.empty() && w.back() == static_cast<long long>(k) - 1) w.pop_back();
    }
    for (auto& [value, cycle] : scored)
        if (value >= out.value - tie) out.optimal.push_back(std::move(cycle));
    std::sort(out.optimal.begin(), out.optimal.end());
    return out;
}

std::vector<Step> simulate(const Policy& policy, const GainTable& gains, std::size_t horizon) {
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
    std::vector<PriceIndex> state(gains.memory(), gains.grid().top());
    std::vector<Step> out;
    out.reserve(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        Step step;
        step.state = state;
        step.reference = *std::min_element(state.begin(), state.end());
        step.price = policy(state);
        if (step.price >= gains.size()) throw ValidationError("policy returned a price outside the grid");
        step.gain = gains(step.reference, step.price);
        std::rotate(state.begin(), state.begin() + 1, state.end());
        state.back() = step.price;
        out.push_back(std::move(step));
    }
    return out;
}

std::vector<Step> simulate(const PriceCycle& cycle, const GainTable& gains, std::size_t horizon) {
    cycle.validate(gains.grid());
    std::size_t t = 0;
    return simulate([&](std::span<const PriceIndex>) { return cycle[t++ % cycle.length()]; }, gains, horizon);
}

double average_gain(std::span<const Step> trajectory) {
    if (trajectory.empty()) return 0.0;
    double total = 0.0;
    for (const Step& s : trajectory) total += s.gain;
    return total / static_cast<double>(trajectory.size());
}

}  // namespace refcycle::oracle
