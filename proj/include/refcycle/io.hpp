#pragma once

// File formats shared by the CLI and tests.
//
// Gain tables: JSON {"prices": [...], "memory": l, "gains": [[...], ...]} with
// rows in increasing reference order, or CSV with a header row of prices and
// one row of gains per reference price. Prices may be JSON numbers or exact
// "n/d" strings.

#include "refcycle/allocator.hpp"
#include "refcycle/core.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace refcycle::io {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

json price_to_json(const Price& p);
Price price_from_json(const json& j);

json gains_to_json(const GainTable& gains);
GainTable gains_from_json(const json& j);
std::string gains_to_csv(const GainTable& gains);
GainTable gains_from_csv(std::string_view text, std::size_t memory);
/// Picks the format from the extension; CSV needs `memory`.
GainTable load_gains(const std::filesystem::path& path, std::optional<std::size_t> memory = std::nullopt);

std::vector<Price> parse_price_list(std::string_view text);

json model_to_json(const alloc::AllocationModel& model);
alloc::AllocationModel model_from_json(const json& j);

/// Header "id,<features...>[,alpha]".
std::vector<alloc::CustomerRecord> customers_from_csv(std::string_view text, std::size_t dimension);

json spec_to_json(const alloc::SimulationSpec& spec, const alloc::CouponPolicy& policy);
/// {"preset": "standard"} starts from the built-in spec; explicit keys override it.
std::pair<alloc::SimulationSpec, alloc::CouponPolicy> spec_from_json(const json& j);

/// Header "customer_id,day,<features...>,coupon_value,purchased".
std::string dataset_to_csv(const alloc::Dataset& data);
json dataset_sidecar(const alloc::Dataset& data);
alloc::Dataset dataset_from_csv(std::string_view text, const json& sidecar);
/// Reads FILE.csv with FILE.json (or FILE.csv.json) beside it.
alloc::Dataset load_dataset(const std::filesystem::path& csv_path);

}  // namespace refcycle::io
