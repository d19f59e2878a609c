#include "refcycle/io.hpp"

#include "refcycle/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace refcycle::io {

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = line.find(sep, start);
        std::string_view cell = line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        out.emplace_back(cell);
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return out;
}

/// Non-blank lines, comments (#) dropped.
std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& line : split(text, '\n'))
        if (!line.empty() && line.front() != '#') out.push_back(line);
    return out;
}

double parse_double(const std::string& cell, std::string_view what) {
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw ValidationError("bad number '" + cell + "' in " + std::string(what));
    return v;
}

std::size_t parse_size(const std::string& cell, std::string_view what) {
    std::size_t v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ValidationError("bad integer '" + cell + "' in " + std::string(what));
    return v;
}

template <class T>
T get(const json& j, const char* key, std::string_view what) {
    if (!j.contains(key)) throw ValidationError(std::string(what) + " is missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string(what) + " has a malformed \"" + key + "\"");
    }
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

json price_to_json(const Price& p) {
    if (p.den() == 1) return p.num();
    const std::string text = p.to_string();
    if (text.find('/') != std::string::npos) return text;
    return json::parse(text);  // exact finite decimal
}

Price price_from_json(const json& j) {
    if (j.is_number_integer()) return Price(j.get<std::int64_t>());
    if (j.is_number()) return Price::parse(j.dump());
    if (j.is_string()) return Price::parse(j.get<std::string>());
    throw ValidationError("price must be a number or a string");
}

json gains_to_json(const GainTable& gains) {
    json prices = json::array();
    for (const auto& p : gains.grid().prices()) prices.push_back(price_to_json(p));
    return json{{"prices", prices}, {"memory", gains.memory()}, {"gains", gains.rows()}};
}

GainTable gains_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("gain table must be a JSON object");
    if (!j.contains("prices") || !j.at("prices").is_array()) throw ValidationError("gain table needs a \"prices\" array");
    std::vector<Price> prices;
    for (const auto& p : j.at("prices")) prices.push_back(price_from_json(p));
    const auto memory = get<std::size_t>(j, "memory", "gain table");
    const auto rows = get<std::vector<std::vector<double>>>(j, "gains", "gain table");
    return GainTable(PriceGrid(std::move(prices), memory), rows);
}

std::string gains_to_csv(const GainTable& gains) {
    std::string out;
    const auto& prices = gains.grid().prices();
    for (std::size_t i = 0; i < prices.size(); ++i) out += (i ? "," : "") + prices[i].to_string();
    out += '\n';
    for (const auto& row : gains.rows()) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
        out += '\n';
    }
    return out;
}

GainTable gains_from_csv(std::string_view text, std::size_t memory) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw ValidationError("gain CSV is empty");
    std::vector<Price> prices;
    for (const auto& cell : split(lines[0], ',')) prices.push_back(Price::parse(cell));
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        std::vector<double> row;
        for (const auto& cell : split(lines[r], ',')) row.push_back(parse_double(cell, "gain CSV"));
        rows.push_back(std::move(row));
    }
    return GainTable(PriceGrid(std::move(prices), memory), rows);
}

GainTable load_gains(const std::filesystem::path& path, std::optional<std::size_t> memory) {
    const std::string text = read_text(path);
    if (path.extension() == ".csv") {
        if (!memory) throw ValidationError("a CSV gain table needs --memory");
        return gains_from_csv(text, *memory);
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    if (memory) j["memory"] = *memory;
    return gains_from_json(j);
}

std::vector<Price> parse_price_list(std::string_view text) {
    std::vector<Price> out;
    std::string normalized(text);
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::istringstream in(normalized);
    std::string tok;
    while (in >> tok) out.push_back(Price::parse(tok));
    if (out.empty()) throw ValidationError("empty price list");
    return out;
}

json model_to_json(const alloc::AllocationModel& model) {
    return json{{"alpha_intercept", model.alpha_intercept}, {"alpha_weights", model.alpha_weights},
                {"beta_weights", model.beta_weights},       {"pivot", model.pivot},
                {"features", model.feature_names}};
}

alloc::AllocationModel model_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("model must be a JSON object");
    alloc::AllocationModel m;
    m.beta_weights = get<std::vector<double>>(j, "beta_weights", "model");
    if (j.contains("alpha_intercept")) m.alpha_intercept = get<double>(j, "alpha_intercept", "model");
    if (j.contains("alpha_weights")) m.alpha_weights = get<std::vector<double>>(j, "alpha_weights", "model");
    if (j.contains("pivot")) m.pivot = get<double>(j, "pivot", "model");
    if (j.contains("features")) m.feature_names = get<std::vector<std::string>>(j, "features", "model");
    m.validate();
    return m;
}

std::vector<alloc::CustomerRecord> customers_from_csv(std::string_view text, std::size_t dimension) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw ValidationError("customer CSV is empty");
    const auto header = split(lines[0], ',');
    const bool has_alpha = !header.empty() && header.back() == "alpha";
    if (header.size() != 1 + dimension + (has_alpha ? 1 : 0))
        throw ValidationError("customer CSV needs an id column and " + std::to_string(dimension) + " feature columns");
    std::vector<alloc::CustomerRecord> out;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != header.size())
            throw ValidationError("customer CSV row " + std::to_string(r + 1) + " has the wrong column count");
        alloc::CustomerRecord c;
        c.id = cells[0];
        for (std::size_t k = 0; k < dimension; ++k) c.features.push_back(parse_double(cells[1 + k], "customer CSV"));
        if (has_alpha) c.alpha = parse_double(cells.back(), "customer CSV");
        out.push_back(std::move(c));
    }
    return out;
}

json spec_to_json(const alloc::SimulationSpec& spec, const alloc::CouponPolicy& policy) {
    json features = json::array();
    for (const auto& f : spec.features) features.push_back({{"name", f.name}, {"low", f.low}, {"high", f.high}});
    json pol;
    if (const auto* my = std::get_if<alloc::MyopicPolicy>(&policy))
        pol = {{"type", "myopic"}, {"lambda", my->lambda}, {"model", model_to_json(my->model)}};
    else
        pol = {{"type", "uniform"}};
    return json{{"customers", spec.customers},
                {"days", spec.days},
                {"features", features},
                {"reference_feature", spec.reference_feature},
                {"reference_memory", spec.reference_memory},
                {"discounts", spec.discounts.values()},
                {"truth", model_to_json(spec.truth)},
                {"feature_noise", spec.feature_noise},
                {"warm_up", spec.warm_up},
                {"policy", pol}};
}

std::pair<alloc::SimulationSpec, alloc::CouponPolicy> spec_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("simulation spec must be a JSON object");
    alloc::SimulationSpec spec;
    if (j.contains("preset")) {
        const auto preset = get<std::string>(j, "preset", "simulation spec");
        if (preset != "standard") throw ValidationError("unknown simulation preset '" + preset + "'");
        spec = alloc::standard_spec(spec.customers, spec.days);
    }
    const char* what = "simulation spec";
    if (j.contains("customers")) spec.customers = get<std::size_t>(j, "customers", what);
    if (j.contains("days")) spec.days = get<std::size_t>(j, "days", what);
    if (j.contains("features")) {
        spec.features.clear();
        for (const auto& f : j.at("features"))
            spec.features.push_back({get<std::string>(f, "name", "feature"), get<double>(f, "low", "feature"),
                                     get<double>(f, "high", "feature")});
    }
    if (j.contains("reference_feature")) spec.reference_feature = get<std::string>(j, "reference_feature", what);
    if (j.contains("reference_memory")) spec.reference_memory = get<std::size_t>(j, "reference_memory", what);
    if (j.contains("discounts")) spec.discounts = alloc::DiscountSet(get<std::vector<double>>(j, "discounts", what));
    if (j.contains("truth")) spec.truth = model_from_json(j.at("truth"));
    if (j.contains("feature_noise")) spec.feature_noise = get<double>(j, "feature_noise", what);
    if (j.contains("warm_up")) spec.warm_up = get<bool>(j, "warm_up", what);

    alloc::CouponPolicy policy = alloc::UniformPolicy{};
    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        const auto type = get<std::string>(p, "type", "policy");
        if (type == "myopic") {
            alloc::MyopicPolicy my;
            my.model = p.contains("model") ? model_from_json(p.at("model")) : spec.truth;
            if (p.contains("lambda")) my.lambda = get<double>(p, "lambda", "policy");
            policy = std::move(my);
        } else if (type != "uniform") {
            throw ValidationError("unknown policy type '" + type + "'");
        }
    }
    return {std::move(spec), std::move(policy)};
}

std::string dataset_to_csv(const alloc::Dataset& data) {
    std::string out = "customer_id,day";
    for (const auto& name : data.feature_names) out += "," + name;
    out += ",coupon_value,purchased\n";
    for (const auto& r : data.rows) {
        out += std::to_string(r.customer) + "," + std::to_string(r.day);
        for (double x : r.x) out += "," + format_double(x);
        out += "," + format_double(r.discount) + "," + std::to_string(r.purchased) + "\n";
    }
    return out;
}

json dataset_sidecar(const alloc::Dataset& data) {
    return json{{"features", data.feature_names},
                {"reference_feature", data.feature_names.at(data.reference_feature)},
                {"reference_memory", data.reference_memory},
                {"discounts", data.discounts.values()}};
}

alloc::Dataset dataset_from_csv(std::string_view text, const json& sidecar) {
    alloc::Dataset data;
    data.feature_names = get<std::vector<std::string>>(sidecar, "features", "dataset sidecar");
    const auto ref_name = get<std::string>(sidecar, "reference_feature", "dataset sidecar");
    const auto ref = std::find(data.feature_names.begin(), data.feature_names.end(), ref_name);
    if (ref == data.feature_names.end()) throw ValidationError("reference feature '" + ref_name + "' is not a column");
    data.reference_feature = static_cast<std::size_t>(ref - data.feature_names.begin());
    if (sidecar.contains("reference_memory"))
        data.reference_memory = get<std::size_t>(sidecar, "reference_memory", "dataset sidecar");
    data.discounts = alloc::DiscountSet(get<std::vector<double>>(sidecar, "discounts", "dataset sidecar"));

    const auto lines = lines_of(text);
    if (lines.empty()) throw ValidationError("dataset CSV is empty");
    const auto header = split(lines[0], ',');
    const std::size_t dim = data.feature_names.size();
    if (header.size() != dim + 4 || header[0] != "customer_id" || header[1] != "day" ||
        header[dim + 2] != "coupon_value" || header[dim + 3] != "purchased" ||
        !std::equal(data.feature_names.begin(), data.feature_names.end(), header.begin() + 2))
        throw ValidationError("dataset header must be customer_id,day,<sidecar features>,coupon_value,purchased");

    std::map<std::string, std::size_t> ids;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != header.size())
            throw ValidationError("dataset row " + std::to_string(r + 1) + " has the wrong column count");
        alloc::DatasetRow row;
        row.customer = ids.emplace(cells[0], ids.size()).first->second;
        row.day = parse_size(cells[1], "dataset day");
        for (std::size_t k = 0; k < dim; ++k) row.x.push_back(parse_double(cells[2 + k], "dataset"));
        row.discount = parse_double(cells[dim + 2], "dataset coupon_value");
        if (!data.discounts.find(row.discount))
            throw ValidationError("coupon value " + cells[dim + 2] + " is not in the discount set");
        const std::string& y = cells[dim + 3];
        if (y != "0" && y != "1") throw ValidationError("purchased must be 0 or 1, got '" + y + "'");
        row.purchased = y == "1";
        data.rows.push_back(std::move(row));
    }
    std::stable_sort(data.rows.begin(), data.rows.end(), [](const auto& a, const auto& b) {
        return a.customer != b.customer ? a.customer < b.customer : a.day < b.day;
    });
    return data;
}

alloc::Dataset load_dataset(const std::filesystem::path& csv_path) {
    auto sidecar = csv_path;
    sidecar.replace_extension(".json");
    if (!std::filesystem::exists(sidecar)) sidecar = csv_path.string() + ".json";
    json meta;
    try {
        meta = json::parse(read_text(sidecar));
    } catch (const json::parse_error& e) {
        throw ValidationError(sidecar.string() + ": " + e.what());
    }
    return dataset_from_csv(read_text(csv_path), meta);
}

}  // namespace refcycle::io
