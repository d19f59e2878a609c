#include "refcycle/cli.hpp"

#include "refcycle/allocator.hpp"
#include "refcycle/errors.hpp"
#include "refcycle/io.hpp"
#include "refcycle/oracle.hpp"
#include "refcycle/reduce.hpp"
#include "refcycle/solver.hpp"
#include "refcycle/tightness.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#ifndef REFCYCLE_VERSION
#define REFCYCLE_VERSION "0.0.0"
#endif

namespace refcycle::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct Options {
    std::string gains;
    std::string cycle;
    std::string prices;
    std::string memory;
    std::string target;
    std::string model;
    std::string customers;
    std::string spec;
    std::string dataset;
    std::string out;
    double budget = 0.0;
    double basket = 1.0;
    std::uint64_t seed = 0;
    std::size_t horizon = 0;
};

/// What a command produced; the manifest is assembled from it.
struct Run {
    json result;
    std::map<std::string, std::string> inputs;  // path -> hash
    std::vector<std::string> outputs;
    int exit_code = kExitOk;
};

std::string read_input(Run& run, const std::string& path) {
    std::string text = io::read_text(path);
    run.inputs[path] = io::fnv1a_hex(text);
    return text;
}

std::optional<std::size_t> memory_flag(const Options& o) {
    if (o.memory.empty()) return std::nullopt;
    std::size_t m = 0;
    const auto res = std::from_chars(o.memory.data(), o.memory.data() + o.memory.size(), m);
    if (res.ec != std::errc() || res.ptr != o.memory.data() + o.memory.size() || m == 0)
        throw ValidationError("--memory must be a positive integer");
    return m;
}

std::vector<std::size_t> memory_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::string normalized = text;
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::istringstream in(normalized);
    std::string tok;
    while (in >> tok) {
        std::size_t m = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), m);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || m == 0)
            throw ValidationError("--memory entries must be positive integers");
        out.push_back(m);
    }
    if (out.empty()) throw ValidationError("--memory list is empty");
    return out;
}

GainTable load_gains(Run& run, const Options& o) {
    if (o.gains.empty()) throw ValidationError("--gains is required");
    const std::string text = read_input(run, o.gains);
    const auto memory = memory_flag(o);
    if (fs::path(o.gains).extension() == ".csv") {
        if (!memory) throw ValidationError("a CSV gain table needs --memory");
        return io::gains_from_csv(text, *memory);
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(o.gains + ": " + e.what());
    }
    if (memory) j["memory"] = *memory;
    return io::gains_from_json(j);
}

json solve_json(const GainTable& gains) {
    const SolveResult r = solve(gains);
    return json{{"opt", r.opt},
                {"generator", format_generator(r.generator, gains.grid())},
                {"cycle", format_cycle(r.cycle, gains.grid())},
                {"bias", r.bias},
                {"residual", bellman_residual(r, gains)},
                {"reference_monotone", r.reference_monotone},
                {"assumption_violated", r.assumption_violated}};
}

void cmd_solve(Run& run, const Options& o) { run.result = solve_json(load_gains(run, o)); }

void cmd_oracle(Run& run, const Options& o) {
    const GainTable gains = load_gains(run, o);
    const auto mc = oracle::max_mean_cycle(gains);
    run.result = {{"value", mc.value},
                  {"witness", format_cycle(mc.witness, gains.grid())},
                  {"states", mc.nodes},
                  {"witness_is_least", mc.witness_is_least},
                  {"reference_monotone", gains.reference_monotone()}};
    if (gains.size() <= 9) {
        const auto gen = oracle::exhaustive_generators(gains);
        run.result["best_generator_value"] = gen.value;
        run.result["best_generator"] = format_generator(gen.best, gains.grid());
    }
    if (o.horizon > 0) {
        const auto traj = oracle::simulate(mc.witness, gains, o.horizon);
        run.result["simulated_average"] = oracle::average_gain(traj);
        run.result["horizon"] = o.horizon;
    }
}

void cmd_reduce(Run& run, const Options& o) {
    const GainTable gains = load_gains(run, o);
    if (o.cycle.empty()) throw ValidationError("--cycle is required");
    const PriceCycle input = parse_cycle(o.cycle, gains.grid());
    if (!gains.reference_monotone())
        throw AssumptionViolation("reduction requires a reference-monotone gain table");
    const auto red = reduce::reduce_to_l_up_1_down(input, gains);
    json steps = json::array();
    for (const auto& s : red.trace.steps)
        steps.push_back({{"kind", reduce::to_string(s.kind)},
                         {"before", format_cycle(s.before, gains.grid())},
                         {"after", format_cycle(s.after, gains.grid())},
                         {"objective_before", s.objective_before},
                         {"objective_after", s.objective_after}});
    const auto gen = as_l_up_1_down(red.cycle, gains.memory());
    run.result = {{"input", format_cycle(input, gains.grid())},
                  {"input_objective", cycle_objective(input, gains)},
                  {"output", format_cycle(red.cycle.canonical(), gains.grid())},
                  {"output_objective", cycle_objective(red.cycle, gains)},
                  {"generator", gen ? json(format_generator(*gen, gains.grid())) : json(nullptr)},
                  {"splits", red.trace.split_count()},
                  {"trace", steps}};
}

void cmd_tightness(Run& run, const Options& o) {
    if (o.prices.empty() || o.target.empty()) throw ValidationError("--prices and --target are required");
    const auto memory = memory_flag(o);
    if (!memory) throw ValidationError("--memory is required");
    const PriceGrid grid(io::parse_price_list(o.prices), *memory);
    const PriceCycle parsed = parse_cycle(o.target, grid);
    const GeneratorCycle target(parsed.tokens());
    const auto inst = tightness::build(target, grid);
    const auto check = tightness::verify_uniqueness(inst);
    run.result = {{"target", format_generator(target, grid)},
                  {"expansion", format_cycle(expand(target, grid.memory()), grid)},
                  {"level", inst.level},
                  {"penalty", inst.penalty},
                  {"unique", check.unique},
                  {"oracle_value", check.oracle_value},
                  {"gains", io::gains_to_json(inst.gains)}};
}

void cmd_allocate(Run& run, const Options& o) {
    if (o.model.empty() || o.customers.empty()) throw ValidationError("--model and --customers are required");
    json mj;
    try {
        mj = json::parse(read_input(run, o.model));
    } catch (const json::parse_error& e) {
        throw ValidationError(o.model + ": " + e.what());
    }
    const auto model = io::model_from_json(mj);
    alloc::DiscountSet discounts;
    if (mj.contains("discounts")) discounts = alloc::DiscountSet(mj.at("discounts").get<std::vector<double>>());
    const auto customers = io::customers_from_csv(read_input(run, o.customers), model.dimension());

    alloc::BudgetConfig cfg;
    cfg.basket_value = o.basket;
    cfg.budget = o.budget;
    const auto tuned = alloc::tune_lambda(model, customers, discounts, cfg);
    const auto assignments = alloc::myopic_assign(model, customers, tuned.lambda, discounts);

    std::string csv = "id,coupon_value,purchase_prob\n";
    for (std::size_t i = 0; i < customers.size(); ++i)
        csv += customers[i].id + "," + io::format_double(assignments[i]) + "," +
               io::format_double(alloc::purchase_prob(model, customers[i], assignments[i])) + "\n";

    run.result = {{"lambda", tuned.lambda},
                  {"redemption", alloc::projected_redemption(model, customers, assignments, cfg.basket_value)},
                  {"expected_revenue", alloc::expected_revenue(model, customers, assignments, cfg.basket_value)},
                  {"budget", cfg.budget},
                  {"customers", customers.size()},
                  {"negative_sensitivity_rate", tuned.negative_sensitivity_rate}};
    if (o.out.empty()) {
        run.result["assignments_csv"] = csv;
    } else {
        fs::path path(o.out);
        path.replace_extension(".assignments.csv");
        io::write_text(path, csv);
        run.outputs.push_back(path.string());
        run.result["assignments"] = path.string();
    }
}

void cmd_simulate(Run& run, const Options& o) {
    if (o.spec.empty()) throw ValidationError("--spec is required");
    if (o.dataset.empty()) throw ValidationError("--dataset names the CSV file to write");
    json sj;
    try {
        sj = json::parse(read_input(run, o.spec));
    } catch (const json::parse_error& e) {
        throw ValidationError(o.spec + ": " + e.what());
    }
    auto [spec, policy] = io::spec_from_json(sj);
    if (o.horizon > 0) spec.days = o.horizon;
    const auto data = alloc::simulate_population(spec, policy, o.seed);

    fs::path csv(o.dataset);
    fs::path sidecar = csv;
    sidecar.replace_extension(".json");
    io::write_text(csv, io::dataset_to_csv(data));
    io::write_text(sidecar, io::dataset_sidecar(data).dump(2) + "\n");
    run.outputs.push_back(csv.string());
    run.outputs.push_back(sidecar.string());

    double buys = 0.0;
    for (const auto& r : data.rows) buys += r.purchased;
    run.result = {{"rows", data.rows.size()},
                  {"customers", spec.customers},
                  {"days", spec.days},
                  {"purchase_rate", data.rows.empty() ? 0.0 : buys / static_cast<double>(data.rows.size())},
                  {"dataset", csv.string()},
                  {"sidecar", sidecar.string()}};
}

void cmd_analyze(Run& run, const Options& o) {
    if (o.dataset.empty()) throw ValidationError("--dataset is required");
    const std::vector<std::size_t> memories = memory_list(o.memory.empty() ? "3,4,5,7" : o.memory);
    fs::path sidecar(o.dataset);
    sidecar.replace_extension(".json");
    const std::string csv_text = read_input(run, o.dataset);
    json meta;
    try {
        meta = json::parse(read_input(run, sidecar.string()));
    } catch (const json::parse_error& e) {
        throw ValidationError(sidecar.string() + ": " + e.what());
    }
    const auto data = io::dataset_from_csv(csv_text, meta);

    json corr = json::array();
    for (const auto& row : alloc::reference_correlations(data, memories))
        corr.push_back({{"memory", row.memory},
                        {"rows", row.rows},
                        {"corr_max", row.corr_max ? json(*row.corr_max) : json(nullptr)},
                        {"corr_avg", row.corr_avg ? json(*row.corr_avg) : json(nullptr)}});
    run.result = {{"correlations", corr}};
    try {
        json table = json::array();
        for (const auto& row : alloc::monotonicity_table(data, memories))
            table.push_back({{"memory", row.memory},
                             {"small_current", row.small_current},
                             {"large_current", row.large_current}});
        run.result["monotonicity"] = table;
    } catch (const ValidationError& e) {
        run.result["monotonicity"] = nullptr;
        run.result["monotonicity_error"] = e.what();
    }
}

// --- selftest ---------------------------------------------------------------

GainTable nonmonotone4() {
    return GainTable(PriceGrid({1, 2, 3, 4}, 2),
                     {{0, 1, 0, 1}, {0, 0, 1, 1}, {1, 0, 0, 1}, {0, 0, 0, 0}});
}

void cmd_selftest(Run& run, const Options&) {
    json checks = json::array();
    bool all = true;
    auto check = [&](const std::string& name, const std::function<bool()>& f) {
        bool ok = false;
        try {
            ok = f();
        } catch (const std::exception&) {
            ok = false;
        }
        all = all && ok;
        checks.push_back({{"name", name}, {"pass", ok}});
    };

    const PriceGrid p3({1, 2, 3}, 3);
    auto cyc = [&](std::vector<PriceIndex> t) { return PriceCycle(std::move(t)); };
    check("expand (1,2) with memory 3 is 1222",
          [&] { return expand(GeneratorCycle({0, 1}), 3) == cyc({0, 1, 1, 1}); });
    check("expand (1,3,2) with memory 3 is 13332",
          [&] { return expand(GeneratorCycle({0, 2, 1}), 3) == cyc({0, 2, 2, 2, 1}); });
    check("1222333 is l-up-1-down with generator (1,2,3)", [&] {
        const auto g = as_l_up_1_down(cyc({0, 1, 1, 1, 2, 2, 2}), 3);
        return g && *g == GeneratorCycle({0, 1, 2});
    });
    check("12 is not l-up-1-down", [&] { return !is_l_up_1_down(cyc({0, 1}), 3); });
    check("12223332 is not l-up-1-down", [&] { return !is_l_up_1_down(cyc({0, 1, 1, 1, 2, 2, 2, 1}), 3); });

    const GainTable fixture = nonmonotone4();
    check("the non-monotone fixture is not reference-monotone", [&] { return !fixture.reference_monotone(); });
    check("414243 averages 1 under the non-monotone fixture",
          [&] { return cycle_objective(cyc({3, 0, 3, 1, 3, 2}), fixture) == 1.0; });
    check("full-state optimum on the non-monotone fixture is 1, attained by 414243", [&] {
        const auto mc = oracle::max_mean_cycle(fixture);
        return std::abs(mc.value - 1.0) <= 1e-12 && cycle_objective(mc.witness, fixture) == mc.value;
    });
    // The non-monotone fixture also lets the l-up-1-down cycle 12233 reach 1.
    check("best l-up-1-down cycle on the non-monotone fixture reaches the full-state optimum", [&] {
        return oracle::exhaustive_generators(fixture).value == 1.0 &&
               cycle_objective(expand(GeneratorCycle({0, 1, 2}), 2), fixture) == 1.0;
    });
    check("solve flags the non-monotone fixture as not reference-monotone", [&] {
        const auto r = solve(fixture);
        return !r.reference_monotone && r.assumption_violated;
    });
    run.result = {{"checks", checks}, {"passed", all}};
    if (!all) run.exit_code = kExitFailure;
}

void write_manifest(const Run& run, const std::string& command, const Options& o, double seconds,
                    std::ostream& err) {
    json inputs = json::object();
    for (const auto& [path, hash] : run.inputs) inputs[path] = hash;
    json outputs = run.outputs;
    const json manifest = {{"command", command},   {"inputs", inputs},          {"seed", o.seed},
                           {"version", REFCYCLE_VERSION}, {"wall_time_seconds", seconds}, {"outputs", outputs}};
    if (o.out.empty()) {
        err << manifest.dump() << "\n";
    } else {
        io::write_text(o.out + ".manifest.json", manifest.dump(2) + "\n");
    }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Peak-end reference-price cycles and coupon allocation", "refcycle"};
    app.set_version_flag("--version", REFCYCLE_VERSION);
    app.require_subcommand(1);
    Options o;

    using Handler = void (*)(Run&, const Options&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"solve", "Optimal l-up-1-down cycle via the reduced Bellman equations", cmd_solve},
        {"oracle", "Exact maximum mean cycle on the full state graph", cmd_oracle},
        {"reduce", "Reduce a price cycle to an l-up-1-down cycle with a trace", cmd_reduce},
        {"tightness", "Gain table whose unique optimum is a given generator's expansion", cmd_tightness},
        {"allocate", "Budget-constrained myopic coupon assignment", cmd_allocate},
        {"simulate", "Simulate a customer population to a dataset CSV", cmd_simulate},
        {"analyze", "Reference-coupon correlations and purchase-rate table", cmd_analyze},
        {"selftest", "Run bundled fixtures", cmd_selftest},
    };
    std::map<const CLI::App*, Handler> handlers;
    for (const auto& [name, help, handler] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        handlers[sub] = handler;
        sub->add_option("--gains", o.gains, "Gain table (JSON or CSV)");
        sub->add_option("--cycle", o.cycle, "Price cycle, whitespace-separated prices");
        sub->add_option("--prices", o.prices, "Price grid, comma or space separated");
        sub->add_option("--memory", o.memory, "Memory length (analyze: comma-separated list)");
        sub->add_option("--target", o.target, "Generator cycle, whitespace-separated prices");
        sub->add_option("--model", o.model, "Allocation model JSON");
        sub->add_option("--customers", o.customers, "Customer CSV");
        sub->add_option("--budget", o.budget, "Daily budget B");
        sub->add_option("--W", o.basket, "Average basket value W");
        sub->add_option("--spec", o.spec, "Simulation spec JSON");
        sub->add_option("--dataset", o.dataset, "Dataset CSV (JSON sidecar alongside)");
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--out", o.out, "Write the JSON result here instead of stdout");
        sub->add_option("--horizon", o.horizon, "Simulation horizon");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    const auto start = std::chrono::steady_clock::now();
    Run run;
    try {
        handlers.at(chosen)(run, o);
    } catch (const AssumptionViolation& e) {
        err << "refcycle " << chosen->get_name() << ": assumption violated: " << e.what() << "\n";
        return kExitAssumption;
    } catch (const ValidationError& e) {
        err << "refcycle " << chosen->get_name() << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const InfeasibleBudget& e) {
        err << "refcycle " << chosen->get_name() << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "refcycle " << chosen->get_name() << ": " << e.what() << "\n";
        return kExitFailure;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string text = run.result.dump(2) + "\n";
    try {
        if (o.out.empty()) {
            out << text;
        } else {
            io::write_text(o.out, text);
            run.outputs.insert(run.outputs.begin(), o.out);
        }
        write_manifest(run, chosen->get_name(), o, seconds, err);
    } catch (const ValidationError& e) {
        err << "refcycle: " << e.what() << "\n";
        return kExitValidation;
    }
    return run.exit_code;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace refcycle::cli
